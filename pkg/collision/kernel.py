"""
Collision kernel B(v - u, omega) = |v - u|^kappa b0 |cos theta| and its sphere rule.
"""

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from core.exceptions import KineticException


@dataclass(frozen=True)
class AngularQuadrature:
    """
    Product rule on S^2 about the relative velocity direction.

    Gauss-Legendre in cos(theta) on (0, 1] times uniform azimuths, folded
    over both hemispheres (omega and -omega give the same post-collision
    pair). Integrates b0 |cos theta| exactly.
    """

    n_polar: int = 4
    n_azimuth: int = 8

    @property
    def size(self) -> int:
        return self.n_polar * self.n_azimuth

    @cached_property
    def _rule(self):
        nodes, weights = np.polynomial.legendre.leggauss(self.n_polar)
        cos_theta = 0.5 * (nodes + 1.0)
        polar_weight = 0.5 * weights
        phi = (np.arange(self.n_azimuth) + 0.5) * (2.0 * np.pi / self.n_azimuth)
        c, p = np.meshgrid(cos_theta, phi, indexing="ij")
        pw = np.repeat(polar_weight, self.n_azimuth).reshape(c.shape)
        weights = 2.0 * pw * (2.0 * np.pi / self.n_azimuth)
        return c.ravel(), np.sqrt(1.0 - c.ravel() ** 2), p.ravel(), weights.ravel()

    @property
    def cos_theta(self) -> np.ndarray:
        return self._rule[0]

    @property
    def sin_theta(self) -> np.ndarray:
        return self._rule[1]

    @property
    def phi(self) -> np.ndarray:
        return self._rule[2]

    @property
    def weights(self) -> np.ndarray:
        """Solid-angle weights; they sum to 4 pi."""
        return self._rule[3]


@dataclass(frozen=True)
class KernelSpec:
    """
    Hard-potential kernel with angular cutoff.

    Attributes:
        kappa: Relative-speed exponent in [0, 1]
        b0: Angular amplitude, b(cos theta) = b0 |cos theta|
        quadrature: Sphere rule used for the omega integrals
    """

    kappa: float = 1.0
    b0: float = 1.0
    quadrature: AngularQuadrature = field(default_factory=AngularQuadrature)

    def violations(self) -> list:
        problems = []
        if not 0.0 <= self.kappa <= 1.0:
            problems.append(f"kappa must lie in [0, 1], got {self.kappa}")
        if not self.b0 > 0.0:
            problems.append(f"b0 must be > 0, got {self.b0}")
        if self.quadrature.n_polar < 1 or self.quadrature.n_azimuth < 1:
            problems.append("angular quadrature needs at least one node per direction")
        return problems

    def validate(self) -> "KernelSpec":
        problems = self.violations()
        if problems:
            raise KineticException("; ".join(problems), error_code="invalid_input")
        return self

    @property
    def angular_total(self) -> float:
        """Quadrature value of the integral of b0 |cos theta| over S^2 (2 pi b0)."""
        q = self.quadrature
        return float(self.b0 * np.sum(q.weights * q.cos_theta))

    def cross_section(self, relative_speed) -> np.ndarray:
        """|v - u|^kappa; 0^0 is taken as 1."""
        return np.power(np.asarray(relative_speed, dtype=float), self.kappa)

    def angular_factors(self) -> np.ndarray:
        """b0 |cos theta_q| w_q for every sphere node."""
        q = self.quadrature
        return self.b0 * q.cos_theta * q.weights


def kernel_envelope(v, eta) -> np.ndarray:
    """
    Grad-kernel envelope
    {|v-eta| + |v-eta|^-1} exp(-|v-eta|^2/8) exp(-(|v|^2-|eta|^2)^2 / (8|v-eta|^2)).

    Raises:
        KineticException: 'singular_input' when v = eta for any pair
    """
    v = np.asarray(v, dtype=float)
    eta = np.asarray(eta, dtype=float)
    diff = v - eta
    dist_sq = np.einsum("...i,...i->...", diff, diff)
    if np.any(dist_sq == 0.0):
        raise KineticException("Envelope is singular at v = eta", error_code="singular_input")
    dist = np.sqrt(dist_sq)
    energy_gap = np.einsum("...i,...i->...", v, v) - np.einsum("...i,...i->...", eta, eta)
    return (dist + 1.0 / dist) * np.exp(-dist_sq / 8.0) * np.exp(-(energy_gap**2) / (8.0 * dist_sq))
