"""
Slab {|x1| < h}: xi(x) = x1^2 - h^2, convex but not strictly (c_xi = 0).

Only x1 is bounded. A backward ray with v1 = 0 never reaches a wall and gets
t_b = inf, x_b = nan.
"""

import numpy as np

from .base import BaseDomain


class Slab(BaseDomain):
    name = "slab"
    convexity_constant = 0.0
    supports_march = True

    def __init__(self, half_width: float = 1.0):
        self.half_width = float(half_width)

    def level_set(self, x):
        x = np.asarray(x, dtype=float)
        return x[..., 0] ** 2 - self.half_width**2

    def normal(self, x):
        x = np.asarray(x, dtype=float)
        n = np.zeros(x.shape)
        n[..., 0] = np.where(x[..., 0] >= 0.0, 1.0, -1.0)
        return n

    def exit_time(self, x, v):
        x = np.asarray(x, dtype=float)
        v = np.asarray(v, dtype=float)
        x1, v1 = x[..., 0], v[..., 0]
        h = self.half_width
        with np.errstate(divide="ignore", invalid="ignore"):
            t_b = np.where(
                v1 > 0.0,
                (x1 + h) / v1,
                np.where(v1 < 0.0, (h - x1) / np.abs(v1), np.inf),
            )
        t_b = np.maximum(t_b, 0.0)
        x_b = np.where(np.isfinite(t_b)[..., None], x - np.where(np.isfinite(t_b), t_b, 0.0)[..., None] * v, np.nan)
        # pin the exit coordinate exactly to the wall
        wall = np.where(v1 > 0.0, -h, h)
        x_b[..., 0] = np.where(np.isfinite(t_b), wall, np.nan)
        return t_b, x_b

    def project_to_boundary(self, x):
        x = np.array(x, dtype=float)
        x[..., 0] = np.where(x[..., 0] >= 0.0, self.half_width, -self.half_width)
        return x

    @property
    def volume(self) -> float:
        return 2.0 * self.half_width

    @property
    def diameter(self) -> float:
        return 2.0 * self.half_width

    def describe(self):
        return {**super().describe(), "half_width": self.half_width}
