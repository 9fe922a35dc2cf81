"""Unit ball: xi(x) = |x|^2 - 1, strictly convex with c_xi = 2."""

import numpy as np

from .base import BaseDomain, _sq


class UnitBall(BaseDomain):
    name = "unit_ball"
    convexity_constant = 2.0
    supports_march = False

    def level_set(self, x):
        return _sq(np.asarray(x, dtype=float)) - 1.0

    def normal(self, x):
        x = np.asarray(x, dtype=float)
        return x / np.sqrt(_sq(x))[..., None]

    def exit_time(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        xv = np.einsum("...i,...i->...", x, v)
        vv = _sq(v)
        # x.v + sqrt((x.v)^2 - |v|^2 (|x|^2 - 1)), clamped so boundary starts give t_b >= 0
        disc = np.maximum(xv**2 - vv * (_sq(x) - 1.0), 0.0)
        t_b = np.maximum((xv + np.sqrt(disc)) / vv, 0.0)
        return t_b, x - t_b[..., None] * v

    def project_to_boundary(self, x):
        return self.normal(x)

    @property
    def volume(self) -> float:
        return 4.0 * np.pi / 3.0

    @property
    def diameter(self) -> float:
        return 2.0
