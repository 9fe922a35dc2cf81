"""
Collision operator services.

The gain integral is evaluated by direct summation over lattice partners u
and sphere nodes omega, with post-collision velocities
v' = v - ((v-u).omega) omega, u' = u + ((v-u).omega) omega read from the
lattice by trilinear interpolation. Rows of target velocities are processed
in blocks; blocks write disjoint outputs and are combined in block order so
results do not depend on the worker count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, Iterator, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import KineticException
from core.reductions import cascade_sum
from velocity.grid import VelocityGrid
from velocity.services import collision_rate, maxwellian, nu_of_v
from .kernel import KernelSpec
from .lattice import Stencil, pad, padded_size, trilinear_stencil, unpad

logger = logging.getLogger(__name__)

# (target, partner) pairs handled per block
_PAIR_BUDGET = 1 << 15

# c(v) per (grid, kernel), oldest evicted first
_CORRECTION_CACHE_SIZE = 16
_CORRECTIONS: Dict[Tuple[VelocityGrid, KernelSpec], np.ndarray] = {}


@dataclass
class CollisionBlock:
    """One sphere node for one block of target rows."""

    rows: np.ndarray
    factor: np.ndarray  # B(v-u, omega_q) w_q dv^3, shape (rows, N_v)
    v_prime: np.ndarray
    u_prime: np.ndarray

    def v_stencil(self, grid: VelocityGrid) -> Stencil:
        return trilinear_stencil(grid, self.v_prime)

    def u_stencil(self, grid: VelocityGrid) -> Stencil:
        return trilinear_stencil(grid, self.u_prime)


def _frames(g: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Unit relative direction and an orthonormal frame around it; g = 0 uses e_z."""
    speed = np.sqrt(np.einsum("...i,...i->...", g, g))
    g_hat = np.where(speed[..., None] > 0.0, g / np.where(speed > 0.0, speed, 1.0)[..., None],
                     np.array([0.0, 0.0, 1.0]))
    helper = np.where(
        (np.abs(g_hat[..., 0]) < 0.9)[..., None], np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    )
    e1 = np.cross(g_hat, helper)
    e1 /= np.sqrt(np.einsum("...i,...i->...", e1, e1))[..., None]
    e2 = np.cross(g_hat, e1)
    return speed, g_hat, e1, e2


def row_blocks(grid: VelocityGrid, rows: Optional[Sequence[int]] = None) -> list:
    rows = np.arange(grid.size) if rows is None else np.asarray(rows, dtype=np.int64)
    block = max(1, _PAIR_BUDGET // grid.size)
    return [rows[i:i + block] for i in range(0, rows.size, block)]


def iter_collision_blocks(
    grid: VelocityGrid, kernel: KernelSpec, rows: np.ndarray
) -> Iterator[CollisionBlock]:
    """Yield the collision geometry of `rows` against every lattice partner, one sphere node at a time."""
    v = grid.nodes[rows]
    u = grid.nodes
    g = v[:, None, :] - u[None, :, :]
    speed, g_hat, e1, e2 = _frames(g)
    cross = kernel.cross_section(speed) * grid.quad_weight
    q = kernel.quadrature
    for cos_t, sin_t, phi, angular in zip(q.cos_theta, q.sin_theta, q.phi, kernel.angular_factors()):
        omega = cos_t * g_hat + sin_t * (np.cos(phi) * e1 + np.sin(phi) * e2)
        shift = (speed * cos_t)[..., None] * omega
        yield CollisionBlock(
            rows=rows,
            factor=cross * angular,
            v_prime=v[:, None, :] - shift,
            u_prime=u[None, :, :] + shift,
        )


def _run_blocks(func, blocks, workers: int) -> list:
    if workers <= 1 or len(blocks) <= 1:
        return [func(block) for block in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, blocks))


def _as_batch(values, grid: VelocityGrid, name: str) -> Tuple[np.ndarray, bool]:
    values = np.asarray(values, dtype=float)
    single = values.ndim == 1
    values = np.atleast_2d(values)
    if values.shape[-1] != grid.size:
        raise KineticException(
            f"{name} has {values.shape[-1]} velocity entries, grid has {grid.size}",
            error_code="invalid_input",
        )
    if not np.all(np.isfinite(values)):
        raise KineticException(f"{name} contains non-finite values", error_code="data_corrupt")
    return values, single


def gain_term(
    grid: VelocityGrid,
    kernel: KernelSpec,
    F1,
    F2,
    rows: Optional[Sequence[int]] = None,
    workers: int = 1,
) -> np.ndarray:
    """
    Raw quadrature gain Q+(F1, F2)(v) = sum_{u, omega} B F1(u') F2(v').

    F1, F2 are (N_v,) or (B, N_v); the result is (B, len(rows)) or (len(rows),).
    """
    F1, single = _as_batch(F1, grid, "F1")
    F2, _ = _as_batch(F2, grid, "F2")
    p1, p2 = pad(grid, F1), pad(grid, F2)
    blocks = row_blocks(grid, rows)

    def sweep(block_rows):
        acc = np.zeros((F1.shape[0], block_rows.size))
        for block in iter_collision_blocks(grid, kernel, block_rows):
            pair = block.u_stencil(grid).gather(p1) * block.v_stencil(grid).gather(p2)
            acc += cascade_sum(pair * block.factor[None], axis=-1)
        return acc

    gain = np.concatenate(_run_blocks(sweep, blocks, workers), axis=1)
    return gain[0] if single else gain


def loss_term(grid: VelocityGrid, kernel: KernelSpec, F1, F2, rows=None) -> np.ndarray:
    """Q-(F1, F2)(v) = F2(v) sum_u 2 pi b0 |v-u|^kappa F1(u) dv^3."""
    F1, single = _as_batch(F1, grid, "F1")
    F2, _ = _as_batch(F2, grid, "F2")
    rows = np.arange(grid.size) if rows is None else np.asarray(rows, dtype=np.int64)
    loss = F2[:, rows] * collision_rate(grid, kernel, F1, targets=grid.nodes[rows])
    return loss[0] if single else loss


def collide(grid: VelocityGrid, kernel: KernelSpec, F1, F2, nodes=None, workers: int = 1):
    """
    Gain and loss of the bilinear collision operator at lattice `nodes` (all by default).

    Returns:
        (gain, loss) arrays; both nonnegative whenever F1, F2 are
    """
    gain = gain_term(grid, kernel, F1, F2, rows=nodes, workers=workers)
    loss = loss_term(grid, kernel, F1, F2, rows=nodes)
    return gain, loss


def equilibrium_correction(grid: VelocityGrid, kernel: KernelSpec, workers: int = 1) -> np.ndarray:
    """
    Node-wise factor c(v) = mu(v) nu(v) / Q+^h(mu, mu)(v) restoring Q+(mu, mu) = mu nu on the lattice.

    Cached per (grid, kernel); row blocks are reduced in a fixed order, so
    `workers` changes only how fast the first call is.
    """
    key = (grid, kernel)
    cached = _CORRECTIONS.get(key)
    if cached is None:
        cached = _compute_correction(grid, kernel, workers)
        if len(_CORRECTIONS) >= _CORRECTION_CACHE_SIZE:
            _CORRECTIONS.pop(next(iter(_CORRECTIONS)))
        _CORRECTIONS[key] = cached
    return cached


def _compute_correction(grid: VelocityGrid, kernel: KernelSpec, workers: int) -> np.ndarray:
    # nodes where the raw gain underflows keep c = 1
    nu, _ = nu_of_v(grid, kernel)
    raw = gain_term(grid, kernel, grid.mu, grid.mu, workers=workers)
    target = grid.mu * nu
    usable = raw > np.finfo(float).tiny * 1e6
    correction = np.where(usable, target / np.where(usable, raw, 1.0), 1.0)
    if not np.all(usable):
        logger.warning(
            f"Gain renormalisation skipped at {int(np.count_nonzero(~usable))} nodes with vanishing gain",
            extra={"grid": grid.describe()},
        )
    logger.info(
        f"Gain renormalisation range [{correction.min():.6g}, {correction.max():.6g}]",
        extra={"n_axis": grid.n_axis, "kappa": kernel.kappa},
    )
    correction.setflags(write=False)
    return correction


def corrected_gain(grid: VelocityGrid, kernel: KernelSpec, F, workers: int = 1, renormalize: bool = True):
    """Q+(F, F) with the equilibrium renormalisation applied (or not)."""
    gain = gain_term(grid, kernel, F, F, workers=workers)
    if renormalize:
        gain = gain * equilibrium_correction(grid, kernel)
    return gain


def gamma(grid: VelocityGrid, kernel: KernelSpec, f, workers: int = 1, renormalize: bool = False):
    """Gamma+-(f, f) = mu^{-1/2} Q+-(sqrt(mu) f, sqrt(mu) f)."""
    g = np.asarray(f, dtype=float) * grid.sqrt_mu
    gain = gain_term(grid, kernel, g, g, workers=workers)
    if renormalize:
        gain = gain * equilibrium_correction(grid, kernel)
    loss = loss_term(grid, kernel, g, g)
    return gain / grid.sqrt_mu, loss / grid.sqrt_mu


def R_of_f(grid: VelocityGrid, kernel: KernelSpec, f) -> np.ndarray:
    """Variable collision frequency R(f)(v) = A(mu + sqrt(mu) f)(v)."""
    f = np.asarray(f, dtype=float)
    nu, _ = nu_of_v(grid, kernel)
    return nu + collision_rate(grid, kernel, grid.sqrt_mu * f)


def R_of_field(grid: VelocityGrid, kernel: KernelSpec, F) -> np.ndarray:
    """R computed directly from F = mu + sqrt(mu) f, for any batch of cells."""
    return collision_rate(grid, kernel, F)


def K_apply(grid: VelocityGrid, kernel: KernelSpec, f, workers: int = 1) -> np.ndarray:
    """
    Apply K = K2 - K1 to f (N_v,) or (B, N_v).

    K1 f(v) = sqrt(mu(v)) A(sqrt(mu) f)(v) is the loss cross term. The gain
    cross terms K2 f(v) = sum B sqrt(mu(u)) [sqrt(mu(u')) f(v') + sqrt(mu(v')) f(u')]
    are symmetrised with their exact lattice adjoint so K is self-adjoint in l2.
    """
    f, single = _as_batch(f, grid, "f")
    batch = f.shape[0]
    size_p = padded_size(grid)
    padded_f = pad(grid, f)
    sqrt_mu = grid.sqrt_mu

    def sweep(block_rows):
        forward = np.zeros((batch, block_rows.size))
        adjoint = np.zeros((batch, size_p))
        f_rows = f[:, block_rows]
        for block in iter_collision_blocks(grid, kernel, block_rows):
            v_st = block.v_stencil(grid)
            u_st = block.u_stencil(grid)
            base = block.factor * sqrt_mu[None, :]
            coef_v = base * np.sqrt(maxwellian(block.u_prime))
            coef_u = base * np.sqrt(maxwellian(block.v_prime))
            forward += cascade_sum(
                coef_v[None] * v_st.gather(padded_f) + coef_u[None] * u_st.gather(padded_f), axis=-1
            )
            for b in range(batch):
                adjoint[b] += v_st.scatter(coef_v * f_rows[b][:, None], size_p)
                adjoint[b] += u_st.scatter(coef_u * f_rows[b][:, None], size_p)
        return block_rows, forward, adjoint

    results = _run_blocks(sweep, row_blocks(grid), workers)
    gain_forward = np.empty_like(f)
    gain_adjoint_p = np.zeros((batch, size_p))
    for rows, forward, adjoint in results:
        gain_forward[:, rows] = forward
        gain_adjoint_p += adjoint
    gain_adjoint = unpad(grid, gain_adjoint_p)

    k2 = 0.5 * (gain_forward + gain_adjoint)
    k1 = sqrt_mu * collision_rate(grid, kernel, sqrt_mu * f)
    out = k2 - k1
    return out[0] if single else out


def linearized_operator(grid: VelocityGrid, kernel: KernelSpec, f, workers: int = 1) -> np.ndarray:
    """L f = nu f - K f."""
    nu, _ = nu_of_v(grid, kernel)
    return nu * np.asarray(f, dtype=float) - K_apply(grid, kernel, f, workers=workers)


def mass_defect(grid: VelocityGrid, kernel: KernelSpec, F, renormalize: bool = True, workers: int = 1) -> float:
    """|sum_v (gain - loss)(v) dv^3| for one velocity function."""
    F = np.asarray(F, dtype=float)
    gain = corrected_gain(grid, kernel, F, workers=workers, renormalize=renormalize)
    loss = loss_term(grid, kernel, F, F)
    return float(abs(cascade_sum(gain - loss)) * grid.quad_weight)


def collision_defects(grid: VelocityGrid, kernel: KernelSpec, workers: int = 1) -> dict:
    """Mass defect of collide on a drifting Maxwellian, with and without the gain renormalisation."""
    F = maxwellian(grid.nodes - np.array([0.5, 0.0, 0.0]))
    return {
        "mass_defect_raw": mass_defect(grid, kernel, F, renormalize=False, workers=workers),
        "mass_defect_corrected": mass_defect(grid, kernel, F, renormalize=True, workers=workers),
    }
