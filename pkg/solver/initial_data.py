"""
Initial-data recipes.

Every recipe returns a DistributionField at t = 0 whose target mass is set.
"""

import logging
from typing import Callable, Dict

import numpy as np

from core.exceptions import KineticException
from velocity.grid import VelocityGrid, WeightSpec
from velocity.services import weighted_sup
from .field import DistributionField, SpatialGrid

logger = logging.getLogger(__name__)


def _equilibrium_values(space: SpatialGrid, grid: VelocityGrid) -> np.ndarray:
    return np.broadcast_to(grid.mu, (space.n_cells, grid.size)).copy()


def equilibrium(space: SpatialGrid, grid: VelocityGrid, spec: WeightSpec, **params) -> np.ndarray:
    return _equilibrium_values(space, grid)


def scaled_equilibrium(space, grid, spec, factor: float = 2.0, **params) -> np.ndarray:
    if not factor >= 0.0:
        raise KineticException(f"factor must be >= 0, got {factor}", error_code="invalid_input")
    return factor * _equilibrium_values(space, grid)


def small_perturbation(space, grid, spec, amplitude: float = 0.1, **params) -> np.ndarray:
    """
    f_0 = eps sqrt(mu) cos(pi x1) with eps chosen so ||w f_0||_Linf = amplitude.

    The cosine profile has zero cell-average on the uniform slab grid, so the
    perturbation carries no mass; F_0 = mu + sqrt(mu) f_0 is clipped at zero.
    """
    profile = np.cos(np.pi * space.centers / space.half_width)
    # remove the discrete mean so mass equals the equilibrium mass
    profile = profile - profile.mean()
    shape = profile[:, None] * grid.sqrt_mu[None, :]
    peak = weighted_sup(shape, grid, spec)
    eps = amplitude / peak if peak > 0.0 else 0.0
    values = grid.mu + grid.sqrt_mu * (eps * shape)
    if np.any(values < 0.0):
        logger.warning(
            f"small_perturbation amplitude {amplitude} produced negative values; clipping",
            extra={"min_value": float(values.min())},
        )
        values = np.maximum(values, 0.0)
    return values


def large_amplitude(space, grid, spec, amplitude: float = 0.9, **params) -> np.ndarray:
    """F_0 = mu (1 + A cos(pi x1)), A in [0, 1]."""
    if not 0.0 <= amplitude <= 1.0:
        raise KineticException(f"large_amplitude needs amplitude in [0, 1], got {amplitude}", error_code="invalid_input")
    profile = 1.0 + amplitude * np.cos(np.pi * space.centers / space.half_width)
    return profile[:, None] * grid.mu[None, :]


def vacuum_hole(space, grid, spec, hole_half_width: float = 0.3, **params) -> np.ndarray:
    """F_0 = 0 for |x1| < hole_half_width, mu elsewhere, rescaled to the equilibrium mass."""
    if not 0.0 < hole_half_width < space.half_width:
        raise KineticException(
            f"hole_half_width must lie in (0, {space.half_width}), got {hole_half_width}",
            error_code="invalid_input",
        )
    outside = (np.abs(space.centers) >= hole_half_width).astype(float)
    if outside.sum() == 0.0:
        raise KineticException("Vacuum hole covers every cell", error_code="degenerate_state")
    scale = space.n_cells / outside.sum()
    return (scale * outside)[:, None] * grid.mu[None, :]


RECIPE_REGISTRY: Dict[str, Callable[..., np.ndarray]] = {
    "equilibrium": equilibrium,
    "scaled_equilibrium": scaled_equilibrium,
    "small_perturbation": small_perturbation,
    "large_amplitude": large_amplitude,
    "vacuum_hole": vacuum_hole,
}


def initial_field(
    recipe: str,
    space: SpatialGrid,
    grid: VelocityGrid,
    spec: WeightSpec,
    **params,
) -> DistributionField:
    """
    Build the initial field for a named recipe.

    Raises:
        KineticException: 'invalid_input' for an unknown recipe or out-of-range parameters
    """
    if recipe not in RECIPE_REGISTRY:
        supported = ", ".join(RECIPE_REGISTRY.keys())
        raise KineticException(
            f"Unknown initial-data recipe: {recipe}. Supported recipes: {supported}",
            error_code="invalid_input",
        )
    values = RECIPE_REGISTRY[recipe](space, grid, spec, **params)
    field = DistributionField(space=space, velocity=grid, values=values, time_stamp=0.0)
    return field.with_target_mass(field.mass)
