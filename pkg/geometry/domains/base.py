"""
Base class for level-set domains.

A domain is Omega = {x : xi(x) < 0} with outward normal n on xi = 0. Concrete
shapes supply closed-form exit times so that characteristic tracing needs no
root finder. All methods are vectorised over leading axes of (..., 3) arrays.
"""

from abc import ABC, abstractmethod
from typing import Any, Dict, Tuple

import numpy as np

# |xi(x)| <= ON_BOUNDARY_TOL (1 + |x|^2) counts as on the boundary
ON_BOUNDARY_TOL = 1e-10
# |v.n| < GRAZING_TOL |v| on the boundary counts as grazing
GRAZING_TOL = 1e-8


def _sq(x: np.ndarray) -> np.ndarray:
    return np.einsum("...i,...i->...", x, x)


class BaseDomain(ABC):
    """
    Abstract convex domain.

    Attributes:
        name: Registry name of the shape
        convexity_constant: c_xi, a lower bound of the level-set Hessian (0 when not strictly convex)
        supports_march: Whether the PDE solver can march on this shape
    """

    name: str = ""
    convexity_constant: float = 0.0
    supports_march: bool = False

    @abstractmethod
    def level_set(self, x) -> np.ndarray:
        """xi(x); negative inside."""

    @abstractmethod
    def normal(self, x) -> np.ndarray:
        """Outward unit normal at boundary points."""

    @abstractmethod
    def exit_time(self, x, v) -> Tuple[np.ndarray, np.ndarray]:
        """
        Backward exit time and point for points in the closure.

        Returns:
            (t_b, x_b) with x_b = x - t_b v on the boundary; t_b = inf and
            x_b = nan when the backward ray never reaches the boundary
        """

    @abstractmethod
    def project_to_boundary(self, x) -> np.ndarray:
        """Nearest boundary point, used to remove drift from repeated exits."""

    @property
    @abstractmethod
    def volume(self) -> float:
        """Measure of Omega (per unit cross-section for unbounded directions)."""

    @property
    @abstractmethod
    def diameter(self) -> float:
        """Largest chord length across the bounded directions."""

    def boundary_tolerance(self, x) -> np.ndarray:
        return ON_BOUNDARY_TOL * (1.0 + _sq(np.asarray(x, dtype=float)))

    def is_inside(self, x) -> np.ndarray:
        return self.level_set(x) < 0.0

    def in_closure(self, x) -> np.ndarray:
        return self.level_set(x) <= self.boundary_tolerance(x)

    def on_boundary(self, x) -> np.ndarray:
        return np.abs(self.level_set(x)) <= self.boundary_tolerance(x)

    def describe(self) -> Dict[str, Any]:
        return {"shape": self.name, "convexity_constant": self.convexity_constant}
