"""
Semi-Lagrangian transport with an exponential integrating factor.

Each (cell, node) pair is traced back along x1 - v1 tau. Foot values come
from linear interpolation over the cell centres extended by one ghost node
on each wall; the ghost carries the incoming diffuse value for nodes that
enter through that wall and the one-sided extrapolated trace otherwise. A
ray that reaches the wall before tau = dt starts from the incoming wall
value at the crossing time.
"""

import logging
from dataclasses import dataclass

import numpy as np

from core.exceptions import KineticException
from velocity.grid import VelocityGrid
from velocity.services import CONTINUUM_WALL_CONSTANT, half_space_flux, lattice_wall_constant
from .field import DistributionField, SpatialGrid

logger = logging.getLogger(__name__)

LEFT_NORMAL = np.array([-1.0, 0.0, 0.0])
RIGHT_NORMAL = np.array([1.0, 0.0, 0.0])


def wall_traces(values: np.ndarray) -> np.ndarray:
    """One-sided linear extrapolation of cell values to both walls, clipped at zero -> (2, N_v)."""
    left = np.maximum(1.5 * values[0] - 0.5 * values[1], 0.0)
    right = np.maximum(1.5 * values[-1] - 0.5 * values[-2], 0.0)
    return np.stack([left, right])


def wall_constant(grid: VelocityGrid, lattice: bool = True) -> float:
    return lattice_wall_constant(grid) if lattice else float(CONTINUUM_WALL_CONSTANT)


def diffuse_inflow(grid: VelocityGrid, trace: np.ndarray, n: np.ndarray, constant: float) -> np.ndarray:
    """c_mu mu(v) flux(trace, n) on {v.n < 0}, zero elsewhere."""
    flux = half_space_flux(grid, trace, n)
    incoming = (grid.nodes @ n) < 0.0
    return np.where(incoming, constant * grid.mu * flux, 0.0)


def apply_diffuse_bc(field: DistributionField, x, lattice: bool = True) -> np.ndarray:
    """
    Incoming velocity slice at the wall containing x.

    Raises:
        KineticException: 'domain_violation' when x is not on a slab wall
    """
    x1 = float(np.asarray(x, dtype=float).ravel()[0])
    h = field.space.half_width
    if abs(abs(x1) - h) > 1e-10 * (1.0 + x1 * x1):
        raise KineticException(f"x1={x1} is not on a wall of the slab", error_code="domain_violation")
    side = 1 if x1 > 0.0 else 0
    trace = wall_traces(field.values)[side]
    n = RIGHT_NORMAL if side else LEFT_NORMAL
    return diffuse_inflow(field.velocity, trace, n, wall_constant(field.velocity, lattice))


def inflow_slices(field: DistributionField, lattice: bool = True) -> np.ndarray:
    """Incoming slices at the left and right walls -> (2, N_v)."""
    traces = wall_traces(field.values)
    constant = wall_constant(field.velocity, lattice)
    return np.stack([
        diffuse_inflow(field.velocity, traces[0], LEFT_NORMAL, constant),
        diffuse_inflow(field.velocity, traces[1], RIGHT_NORMAL, constant),
    ])


@dataclass(frozen=True)
class Characteristics:
    """Foot interpolation data for one dt: neighbour rows, weights, and wall crossings."""

    lower: np.ndarray
    upper: np.ndarray
    frac: np.ndarray
    crossed: np.ndarray
    tau: np.ndarray
    columns: np.ndarray

    def sample(self, values: np.ndarray, ghosts: np.ndarray) -> np.ndarray:
        """Foot values of a cell array (N_x, N_v) given wall ghost rows (2, N_v)."""
        extended = np.concatenate([ghosts[0:1], values, ghosts[1:2]], axis=0)
        return (1.0 - self.frac) * extended[self.lower, self.columns] + self.frac * extended[self.upper, self.columns]


def trace_characteristics(space: SpatialGrid, grid: VelocityGrid, dt: float) -> Characteristics:
    """Locate x_i - v1 dt among the wall-extended nodes [-h, x_0, ..., x_{N-1}, h]."""
    h = space.half_width
    nodes = np.concatenate([[-h], space.centers, [h]])
    v1 = grid.nodes[:, 0]
    feet = space.centers[:, None] - v1[None, :] * dt
    with np.errstate(divide="ignore", invalid="ignore"):
        to_wall = np.where(
            v1 > 0.0,
            (space.centers[:, None] + h) / v1[None, :],
            np.where(v1 < 0.0, (h - space.centers[:, None]) / np.abs(v1)[None, :], np.inf),
        )
    crossed = to_wall < dt
    tau = np.where(crossed, to_wall, dt)
    clipped = np.clip(feet, -h, h)
    lower = np.clip(np.searchsorted(nodes, clipped, side="right") - 1, 0, nodes.size - 2)
    upper = lower + 1
    frac = (clipped - nodes[lower]) / (nodes[upper] - nodes[lower])
    columns = np.broadcast_to(np.arange(grid.size), feet.shape)
    return Characteristics(lower=lower, upper=upper, frac=frac, crossed=crossed, tau=tau, columns=columns)


def start_values(field: DistributionField, chars: Characteristics, inflow: np.ndarray) -> np.ndarray:
    """F_n at the foot, or the incoming wall value where the ray crossed a wall."""
    traces = wall_traces(field.values)
    incoming = np.stack([
        (field.velocity.nodes[:, 0] > 0.0),
        (field.velocity.nodes[:, 0] < 0.0),
    ])
    ghosts = np.where(incoming, inflow, traces)
    foot = chars.sample(field.values, ghosts)
    # entering rays with v1 > 0 come through the left wall
    wall_value = np.where(field.velocity.nodes[:, 0] > 0.0, inflow[0], inflow[1])[None, :]
    return np.where(chars.crossed, wall_value, foot)


def duhamel_factor(R: np.ndarray, tau: np.ndarray) -> np.ndarray:
    """(1 - e^{-R tau}) / R, with the R -> 0 limit tau."""
    x = R * tau
    safe = np.where(x > 1e-300, R, 1.0)
    return np.where(x > 1e-300, -np.expm1(-x) / safe, tau)


def transport_duhamel_step(
    field_n: DistributionField,
    R_field: np.ndarray,
    source: np.ndarray,
    dt: float,
    boundary_inflow: np.ndarray,
    chars: Characteristics = None,
    start: np.ndarray = None,
):
    """
    Advance one step of the mild form along backward characteristics.

    F^{n+1} = e^{-R tau} F_start + (1 - e^{-R tau}) / R * S, where tau = dt
    unless the ray met a wall first, F_start is the interpolated foot or the
    incoming wall value, and R, S are the rates held over the step.

    Args:
        field_n: Field at t_n
        R_field: Collision frequency along the characteristics (N_x, N_v), >= 0
        source: Gain source (N_x, N_v), >= 0
        dt: Step length, > 0
        boundary_inflow: Incoming wall slices (2, N_v), left then right
        chars: Precomputed characteristics for dt (optional)
        start: Precomputed start values (optional)

    Returns:
        (DistributionField at t_n + dt, integrating factor e^{-R tau})
    """
    if not dt > 0.0:
        raise KineticException(f"dt must be > 0, got {dt}", error_code="invalid_input")
    if np.any(R_field < 0.0):
        raise KineticException(
            "Negative collision frequency in transport step",
            error_code="contract_violation",
            context={"min_R": float(np.min(R_field))},
        )
    if chars is None:
        chars = trace_characteristics(field_n.space, field_n.velocity, dt)
    if start is None:
        start = start_values(field_n, chars, boundary_inflow)
    factor = np.exp(-R_field * chars.tau)
    values = factor * start + duhamel_factor(R_field, chars.tau) * source
    return field_n.evolve(values, field_n.time_stamp + dt), factor
