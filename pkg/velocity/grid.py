"""
Velocity lattice and weight parameters.

The lattice is the truncated cube {v : |v|_inf <= R_v} sampled with spacing
dv, symmetric under v -> -v and under coordinate permutations. Nodes are
stored flattened in C order over the (v1, v2, v3) axes.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from core.exceptions import KineticException
from core.reductions import cascade_sum


@dataclass(frozen=True)
class WeightSpec:
    """
    Parameters of the velocity weight w(v) = (1 + rho^2|v|^2)^beta e^{varpi|v|^2}.

    Attributes:
        rho: Polynomial scale, > 1
        beta: Polynomial order, >= 5/2
        varpi: Exponential rate, in [0, 1/64] (up to 1/4 outside theorem mode)
    """

    rho: float = 2.0
    beta: float = 2.5
    varpi: float = 1.0 / 64.0

    def violations(self, theorem_mode: bool = True) -> list:
        problems = []
        if not self.rho > 1.0:
            problems.append(f"rho must be > 1, got {self.rho}")
        if not self.beta >= 2.5:
            problems.append(f"beta must be >= 5/2, got {self.beta}")
        varpi_cap = 1.0 / 64.0 if theorem_mode else 0.25
        if not 0.0 <= self.varpi <= varpi_cap:
            problems.append(
                f"varpi must lie in [0, {varpi_cap:g}] "
                f"({'theorem mode' if theorem_mode else 'small-amplitude range'}), got {self.varpi}"
            )
        return problems

    def validate(self, theorem_mode: bool = True) -> "WeightSpec":
        problems = self.violations(theorem_mode)
        if problems:
            raise KineticException("; ".join(problems), error_code="invalid_input")
        return self


@dataclass(frozen=True)
class VelocityGrid:
    """
    Truncated cubic velocity lattice with uniform quadrature weight dv^3.

    Equality and hashing use (radius, spacing) only, so grids can key caches.
    """

    radius: float = 6.0
    spacing: float = 0.75

    def __post_init__(self):
        if not (self.radius > 0 and self.spacing > 0):
            raise KineticException(
                f"Velocity grid needs positive radius and spacing, got "
                f"radius={self.radius}, spacing={self.spacing}",
                error_code="invalid_input",
            )
        if self.half_count < 1:
            raise KineticException(
                "Velocity grid is empty: spacing exceeds radius",
                error_code="invalid_input",
            )

    @property
    def half_count(self) -> int:
        # tolerance absorbs radius/spacing ratios such as 6/0.75 landing a hair below 8
        return int(np.floor(self.radius / self.spacing + 1e-9))

    @property
    def n_axis(self) -> int:
        return 2 * self.half_count + 1

    @property
    def size(self) -> int:
        return self.n_axis**3

    @property
    def quad_weight(self) -> float:
        return self.spacing**3

    @property
    def extent(self) -> float:
        """Largest coordinate actually on the lattice (<= radius)."""
        return self.half_count * self.spacing

    @cached_property
    def axis(self) -> np.ndarray:
        return self.spacing * np.arange(-self.half_count, self.half_count + 1, dtype=float)

    @cached_property
    def nodes(self) -> np.ndarray:
        v1, v2, v3 = np.meshgrid(self.axis, self.axis, self.axis, indexing="ij")
        return np.stack([v1.ravel(), v2.ravel(), v3.ravel()], axis=1)

    @cached_property
    def speed_sq(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.nodes, self.nodes)

    @cached_property
    def mu(self) -> np.ndarray:
        return (2.0 * np.pi) ** -1.5 * np.exp(-0.5 * self.speed_sq)

    @cached_property
    def sqrt_mu(self) -> np.ndarray:
        return np.sqrt(self.mu)

    @cached_property
    def mu_mass(self) -> float:
        """Lattice quadrature of the Maxwellian, ideally 1."""
        return float(cascade_sum(self.mu) * self.quad_weight)

    @property
    def tol_grid(self) -> float:
        """Observed Maxwellian mass error of this lattice."""
        return abs(self.mu_mass - 1.0)

    @cached_property
    def mirror_index(self) -> np.ndarray:
        """Index of -v for every node v."""
        return np.arange(self.size)[::-1].copy()

    def describe(self) -> dict:
        return {
            "radius": self.radius,
            "spacing": self.spacing,
            "n_axis": self.n_axis,
            "size": self.size,
            "mu_mass": self.mu_mass,
            "tol_grid": self.tol_grid,
        }

    def refined(self) -> "VelocityGrid":
        """Same radius, half the spacing."""
        return VelocityGrid(radius=self.radius, spacing=self.spacing / 2.0)
