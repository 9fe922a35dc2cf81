"""
Trilinear evaluation of lattice functions at off-lattice velocities.

Lattice arrays are padded with one ring of zeros so that any point within
one spacing outside the cube interpolates towards zero and points further
out read exactly zero. A stencil is built once per set of query points and
reused for every function evaluated there, both for gathering values and
for scattering with the transposed weights.
"""

from dataclasses import dataclass

import numpy as np

from velocity.grid import VelocityGrid

_CORNERS = [(dx, dy, dz) for dx in (0, 1) for dy in (0, 1) for dz in (0, 1)]


@dataclass(frozen=True)
class Stencil:
    """Eight corner indices into the padded lattice and their weights, each shaped (8, *points)."""

    index: np.ndarray
    weight: np.ndarray

    def gather(self, padded: np.ndarray) -> np.ndarray:
        """Interpolate padded functions (B, P^3) at the stencil points -> (B, *points)."""
        out = padded[:, self.index[0]] * self.weight[0]
        for corner in range(1, 8):
            out += padded[:, self.index[corner]] * self.weight[corner]
        return out

    def scatter(self, values: np.ndarray, padded_size: int) -> np.ndarray:
        """Transpose of `gather` for one function: spread point values onto the padded lattice."""
        return np.bincount(
            self.index.ravel(),
            weights=(self.weight * values[None, ...]).ravel(),
            minlength=padded_size,
        )


def padded_axis(grid: VelocityGrid) -> int:
    return grid.n_axis + 2


def padded_size(grid: VelocityGrid) -> int:
    return padded_axis(grid) ** 3


def pad(grid: VelocityGrid, values: np.ndarray) -> np.ndarray:
    """(B, N_v) -> (B, P^3) with a zero ring."""
    n = grid.n_axis
    batch = values.reshape(-1, n, n, n)
    return np.pad(batch, ((0, 0), (1, 1), (1, 1), (1, 1))).reshape(batch.shape[0], -1)


def unpad(grid: VelocityGrid, padded: np.ndarray) -> np.ndarray:
    """(B, P^3) -> (B, N_v), dropping the ring."""
    p = padded_axis(grid)
    cube = padded.reshape(-1, p, p, p)[:, 1:-1, 1:-1, 1:-1]
    return cube.reshape(cube.shape[0], -1)


def trilinear_stencil(grid: VelocityGrid, points: np.ndarray) -> Stencil:
    """Stencil for `points` shaped (..., 3)."""
    p = padded_axis(grid)
    scaled = (points + grid.extent) / grid.spacing + 1.0
    base = np.floor(scaled)
    frac = scaled - base
    base = base.astype(np.int64)
    inside = np.all((base >= 0) & (base <= p - 2), axis=-1)
    base = np.where(inside[..., None], base, 0)
    frac = np.where(inside[..., None], frac, 0.0)

    shape = points.shape[:-1]
    index = np.empty((8,) + shape, dtype=np.int64)
    weight = np.empty((8,) + shape)
    for corner, (dx, dy, dz) in enumerate(_CORNERS):
        index[corner] = ((base[..., 0] + dx) * p + (base[..., 1] + dy)) * p + (base[..., 2] + dz)
        wx = frac[..., 0] if dx else 1.0 - frac[..., 0]
        wy = frac[..., 1] if dy else 1.0 - frac[..., 1]
        wz = frac[..., 2] if dz else 1.0 - frac[..., 2]
        weight[corner] = np.where(inside, wx * wy * wz, 0.0)
    return Stencil(index=index, weight=weight)


def interpolate(grid: VelocityGrid, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluate lattice function(s) `values` (N_v,) or (B, N_v) at `points` (..., 3)."""
    values = np.asarray(values, dtype=float)
    single = values.ndim == 1
    out = trilinear_stencil(grid, np.asarray(points, dtype=float)).gather(pad(grid, values))
    return out[0] if single else out
