"""
Velocity-space services: Maxwellian, weights, collision frequency, norms.

Every function is pure and works on whole lattice arrays. Distribution
arrays are shaped (..., N_v) with the last axis running over lattice nodes
in the grid's flattened order.
"""

import logging
from dataclasses import dataclass, asdict
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist
from scipy.special import xlogy

from collision.kernel import KernelSpec
from core.exceptions import KineticException
from core.reductions import cascade_sum
from .grid import VelocityGrid, WeightSpec

logger = logging.getLogger(__name__)

MAXWELLIAN_NORMALIZATION = (2.0 * np.pi) ** -1.5
CONTINUUM_WALL_CONSTANT = np.sqrt(2.0 * np.pi)

# rows of the pairwise |v - u| matrix built per block
_PAIR_BLOCK = 512


def _speed_sq(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return np.einsum("...i,...i->...", v, v)


def maxwellian(v) -> np.ndarray:
    """mu(v) = (2 pi)^(-3/2) exp(-|v|^2 / 2) for one velocity or an (..., 3) array."""
    return MAXWELLIAN_NORMALIZATION * np.exp(-0.5 * _speed_sq(v))


def weight_w(spec: WeightSpec, v) -> np.ndarray:
    """w(v) = (1 + rho^2 |v|^2)^beta exp(varpi |v|^2)."""
    s = _speed_sq(v)
    return (1.0 + spec.rho**2 * s) ** spec.beta * np.exp(spec.varpi * s)


def weight_tilde(spec: WeightSpec, v) -> np.ndarray:
    """w~(v) = 1 / (w(v) sqrt(mu(v)))."""
    return 1.0 / (weight_w(spec, v) * np.sqrt(maxwellian(v)))


def collision_rate(grid: VelocityGrid, kernel: KernelSpec, g, targets=None) -> np.ndarray:
    """
    Apply the loss-rate operator A g(v) = sum_u 2 pi b0 |v - u|^kappa g(u) dv^3.

    Args:
        grid: Velocity lattice supplying the u nodes and quadrature weight
        kernel: Collision kernel; its angular quadrature supplies 2 pi b0
        g: Array shaped (..., N_v)
        targets: Optional (M, 3) velocities at which to evaluate; defaults to the lattice

    Returns:
        Array shaped (..., M) (M = N_v by default)
    """
    g = np.asarray(g, dtype=float)
    if g.shape[-1] != grid.size:
        raise KineticException(
            f"Velocity function has {g.shape[-1]} entries, grid has {grid.size}",
            error_code="invalid_input",
        )
    targets = grid.nodes if targets is None else np.atleast_2d(np.asarray(targets, dtype=float))
    lead = g.shape[:-1]
    g2 = g.reshape(-1, grid.size)
    out = np.empty((g2.shape[0], targets.shape[0]))
    scale = kernel.angular_total * grid.quad_weight
    for start in range(0, targets.shape[0], _PAIR_BLOCK):
        block = targets[start:start + _PAIR_BLOCK]
        cross = kernel.cross_section(cdist(block, grid.nodes)) * scale
        out[:, start:start + block.shape[0]] = g2 @ cross.T
    return out.reshape(lead + (targets.shape[0],))


def nu_of_v(grid: VelocityGrid, kernel: KernelSpec, v=None) -> Tuple[np.ndarray, float]:
    """
    Collision frequency nu(v) = A mu (v) and its lattice minimum nu0.

    `v` may be None (all lattice nodes), one velocity, or an (M, 3) array.
    """
    if grid.size == 0:
        raise KineticException("Empty velocity grid", error_code="invalid_input")
    nu_nodes = _nu_on_lattice(grid, kernel)
    nu0 = float(nu_nodes.min())
    if v is None:
        return nu_nodes, nu0
    values = collision_rate(grid, kernel, grid.mu, targets=v)
    if np.ndim(v) == 1:
        values = values[0]
    return values, nu0


@lru_cache(maxsize=32)
def _nu_on_lattice(grid: VelocityGrid, kernel: KernelSpec) -> np.ndarray:
    nu = collision_rate(grid, kernel, grid.mu)
    nu.setflags(write=False)
    return nu


@dataclass(frozen=True)
class NormsRecord:
    """
    Diagnostic norms of a field or perturbation.

    For kind='field' the norms are taken of the perturbation f = (F - mu)/sqrt(mu)
    while mass and min_value refer to F itself.
    """

    mass: float
    l2: float
    winf: float
    gauss_l1v_sup: float
    min_value: float

    def as_dict(self) -> dict:
        return asdict(self)


def _as_cells(values, grid: VelocityGrid) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[None, :]
    if values.shape[-1] != grid.size:
        raise KineticException(
            f"Field has {values.shape[-1]} velocity entries, grid has {grid.size}",
            error_code="invalid_input",
        )
    if not np.all(np.isfinite(values)):
        raise KineticException(
            "Field contains non-finite values",
            error_code="data_corrupt",
            context={"non_finite": int(np.count_nonzero(~np.isfinite(values)))},
        )
    return values


def compute_norms(
    values,
    grid: VelocityGrid,
    spec: WeightSpec,
    cell_volume: float = 1.0,
    kind: str = "field",
) -> NormsRecord:
    """
    Compute mass, ||f||_L2, ||w f||_Linf, sup_x sum e^{-|v|^2/8}|h| dv and min value.

    Args:
        values: (N_x, N_v) or (N_v,) array holding F (kind='field') or f (kind='perturbation')
        grid: Velocity lattice
        spec: Weight parameters
        cell_volume: Spatial measure of one cell
        kind: 'field' or 'perturbation'

    Raises:
        KineticException: 'data_corrupt' on NaN/inf, 'invalid_input' on a bad kind or shape
    """
    values = _as_cells(values, grid)
    if kind == "field":
        perturbation = (values - grid.mu) / grid.sqrt_mu
        mass = float(cascade_sum(values) * grid.quad_weight * cell_volume)
    elif kind == "perturbation":
        perturbation = values
        mass = float(cascade_sum(values * grid.sqrt_mu) * grid.quad_weight * cell_volume)
    else:
        raise KineticException(f"Unknown norm kind: {kind}", error_code="invalid_input")

    w = weight_w(spec, grid.nodes)
    h = np.abs(perturbation) * w
    l2 = float(np.sqrt(cascade_sum(perturbation**2) * grid.quad_weight * cell_volume))
    gauss = np.exp(-grid.speed_sq / 8.0)
    gauss_l1v = cascade_sum(h * gauss, axis=-1) * grid.quad_weight
    return NormsRecord(
        mass=mass,
        l2=l2,
        winf=float(h.max()),
        gauss_l1v_sup=float(np.max(gauss_l1v)),
        min_value=float(values.min()),
    )


def weighted_sup(perturbation, grid: VelocityGrid, spec: WeightSpec) -> float:
    """||w f||_Linf over all cells and nodes."""
    perturbation = np.asarray(perturbation, dtype=float)
    return float(np.max(np.abs(perturbation) * weight_w(spec, grid.nodes)))


def half_space_flux(grid: VelocityGrid, F_at_wall, n) -> np.ndarray:
    """
    Outgoing flux sum_{v.n > 0} F(v) (v.n) dv^3.

    `F_at_wall` may carry leading batch axes; the result drops the last axis.
    """
    n = np.asarray(n, dtype=float)
    vn = grid.nodes @ n
    outgoing = np.where(vn > 0.0, vn, 0.0)
    F_at_wall = np.asarray(F_at_wall, dtype=float)
    return cascade_sum(F_at_wall * outgoing, axis=-1) * grid.quad_weight


def lattice_wall_constant(grid: VelocityGrid, n=(1.0, 0.0, 0.0)) -> float:
    """c_mu on the lattice: 1 / half_space_flux(mu), tends to sqrt(2 pi) as dv -> 0."""
    return float(1.0 / half_space_flux(grid, grid.mu, n))


def relative_entropy(values, grid: VelocityGrid, cell_volume: float = 1.0) -> float:
    """Sum of F ln(F/mu) - F + mu over cells and nodes; zero only at F = mu."""
    values = _as_cells(values, grid)
    density = xlogy(values, values) - values * np.log(grid.mu) - values + grid.mu
    return float(cascade_sum(density) * grid.quad_weight * cell_volume)


@dataclass(frozen=True)
class Moments:
    density: np.ndarray
    bulk_velocity: np.ndarray
    temperature: np.ndarray


def moments(values, grid: VelocityGrid) -> Moments:
    """Per-cell density, bulk velocity and temperature of F."""
    values = _as_cells(values, grid)
    dv3 = grid.quad_weight
    density = cascade_sum(values, axis=-1) * dv3
    momentum = np.stack(
        [cascade_sum(values * grid.nodes[:, i], axis=-1) * dv3 for i in range(3)], axis=-1
    )
    safe = np.where(density > 0.0, density, 1.0)
    bulk = np.where(density[:, None] > 0.0, momentum / safe[:, None], 0.0)
    energy = cascade_sum(values * grid.speed_sq, axis=-1) * dv3
    temperature = np.where(
        density > 0.0, (energy / safe - np.einsum("ij,ij->i", bulk, bulk)) / 3.0, 0.0
    )
    return Moments(density=density, bulk_velocity=bulk, temperature=temperature)


def tol_grid(grid: VelocityGrid, kernel: Optional[KernelSpec] = None) -> dict:
    """Per-grid quadrature diagnostics reported alongside every run."""
    report = {"mu_mass_error": grid.tol_grid, "wall_constant": lattice_wall_constant(grid)}
    if kernel is not None:
        nu, nu0 = nu_of_v(grid, kernel)
        report.update({"nu0": nu0, "nu_max": float(nu.max())})
    return report
