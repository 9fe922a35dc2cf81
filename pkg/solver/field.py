"""
Distribution fields on slab cells x velocity lattice.
"""

from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np

from core.exceptions import KineticException
from core.reductions import cascade_sum
from velocity.grid import VelocityGrid


@dataclass(frozen=True)
class SpatialGrid:
    """Uniform cells on x1 in (-h, h); cell volume is per unit cross-section."""

    half_width: float = 1.0
    n_cells: int = 32

    def __post_init__(self):
        if self.n_cells < 2 or not self.half_width > 0.0:
            raise KineticException(
                f"Spatial grid needs >= 2 cells and positive half width, got "
                f"n_cells={self.n_cells}, half_width={self.half_width}",
                error_code="invalid_input",
            )

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n_cells

    @cached_property
    def centers(self) -> np.ndarray:
        return -self.half_width + (np.arange(self.n_cells) + 0.5) * self.dx


@dataclass(frozen=True, eq=False)
class DistributionField:
    """
    F(x, v) sampled on spatial cells times the velocity lattice.

    Fields are replaced, never mutated: `values` is read-only once wrapped.
    """

    space: SpatialGrid
    velocity: VelocityGrid
    values: np.ndarray
    time_stamp: float = 0.0
    target_mass: float = field(default=float("nan"))

    def __post_init__(self):
        values = np.ascontiguousarray(self.values, dtype=float)
        expected = (self.space.n_cells, self.velocity.size)
        if values.shape != expected:
            raise KineticException(
                f"Field shape {values.shape} does not match grids {expected}",
                error_code="invalid_input",
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def cells(self) -> np.ndarray:
        return self.space.centers

    @property
    def mass(self) -> float:
        return float(cascade_sum(self.values) * self.velocity.quad_weight * self.space.dx)

    @property
    def perturbation(self) -> np.ndarray:
        return (self.values - self.velocity.mu) / self.velocity.sqrt_mu

    def evolve(self, values: np.ndarray, time_stamp: float) -> "DistributionField":
        return replace(self, values=values, time_stamp=float(time_stamp))

    def with_target_mass(self, target_mass: float) -> "DistributionField":
        return replace(self, target_mass=float(target_mass))
