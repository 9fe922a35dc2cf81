"""
Backward characteristics and diffuse-reflection back-time cycles.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from core.exceptions import KineticException
from core.rng import shard_sizes, spawn_streams
from .domains.base import GRAZING_TOL, BaseDomain

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CycleNode:
    t: float
    x: np.ndarray
    v: Optional[np.ndarray]


@dataclass
class BackTimeCycle:
    """
    Diffuse bounces (t_k, x_k, v_k) of one backward trajectory.

    nodes[0] is the query point. The terminal node of a cycle that reached
    t <= 0 carries no velocity.
    """

    nodes: List[CycleNode] = field(default_factory=list)
    terminated_at_initial: bool = False

    @property
    def bounces(self) -> int:
        return len(self.nodes) - 1

    @property
    def times(self) -> np.ndarray:
        return np.array([node.t for node in self.nodes])


def _frame(n: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Two unit tangents completing n to an orthonormal frame (vectorised)."""
    helper = np.where(
        (np.abs(n[..., 0]) < 0.9)[..., None], np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])
    )
    t1 = np.cross(n, helper)
    t1 /= np.sqrt(np.einsum("...i,...i->...", t1, t1))[..., None]
    return t1, np.cross(n, t1)


def _check_velocity(v: np.ndarray) -> None:
    if v.shape[-1] != 3 or not np.all(np.isfinite(v)) or not np.all(np.einsum("...i,...i->...", v, v) > 0.0):
        raise KineticException("Velocity must be a finite nonzero 3-vector", error_code="invalid_input")


def backward_exit(domain: BaseDomain, x, v) -> Tuple[float, np.ndarray]:
    """
    Backward exit time t_b and exit point x_b = x - t_b v for x in the closure.

    Raises:
        KineticException: 'invalid_input' for zero velocity, 'domain_violation' for x outside the closure
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    _check_velocity(v)
    if not np.all(domain.in_closure(x)):
        raise KineticException(
            f"Point {x.tolist()} lies outside the closure of the {domain.name} domain",
            error_code="domain_violation",
        )
    t_b, x_b = domain.exit_time(x, v)
    if np.ndim(t_b) == 0:
        return float(t_b), x_b
    return t_b, x_b


def project_to_boundary(domain: BaseDomain, x) -> np.ndarray:
    return domain.project_to_boundary(np.asarray(x, dtype=float))


def _draw_diffuse(domain: BaseDomain, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    n = domain.normal(x)
    t1, t2 = _frame(n)
    shape = x.shape[:-1]
    # inverse cdf of the flux density u exp(-u^2/2); 1 - U lies in (0, 1]
    u_n = np.sqrt(-2.0 * np.log1p(-rng.random(shape)))
    u_n = np.maximum(u_n, np.finfo(float).tiny)
    tangential = rng.standard_normal(shape + (2,))
    return u_n[..., None] * n + tangential[..., 0:1] * t1 + tangential[..., 1:2] * t2


def sample_diffuse_velocity(domain: BaseDomain, x, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
    """
    Draw v' with density c_mu mu(v') (v'.n(x)) on {v'.n(x) > 0}.

    Args:
        domain: Domain owning the wall
        x: Boundary position
        rng: Counter-based generator (see core.rng)
        size: Number of draws; None returns one velocity

    Raises:
        KineticException: 'domain_violation' when x is not on the boundary
    """
    x = np.asarray(x, dtype=float)
    if not np.all(domain.on_boundary(x)):
        raise KineticException(
            f"Point {x.tolist()} is not on the boundary of the {domain.name} domain",
            error_code="domain_violation",
        )
    if size is None:
        return _draw_diffuse(domain, x, rng)
    return _draw_diffuse(domain, np.broadcast_to(x, (int(size), 3)), rng)


def _validate_start(domain: BaseDomain, t: float, x: np.ndarray, v: np.ndarray) -> None:
    _check_velocity(v)
    if not t > 0.0:
        raise KineticException(f"Cycle start time must be > 0, got {t}", error_code="invalid_input")
    if not domain.in_closure(x):
        raise KineticException(
            f"Point {x.tolist()} lies outside the closure of the {domain.name} domain",
            error_code="domain_violation",
        )
    if domain.on_boundary(x):
        vn = float(np.dot(v, domain.normal(x)))
        speed = float(np.linalg.norm(v))
        if abs(vn) < GRAZING_TOL * speed:
            raise KineticException(
                "Grazing start: v is tangent to the wall",
                error_code="grazing_rejected",
                context={"x": x.tolist(), "v": v.tolist(), "v_dot_n": vn},
            )
        if vn < 0.0:
            raise KineticException(
                "Incoming start: the backward ray leaves the domain immediately",
                error_code="domain_violation",
                context={"x": x.tolist(), "v": v.tolist(), "v_dot_n": vn},
            )


def build_cycle(
    domain: BaseDomain,
    t: float,
    x,
    v,
    k_max: int,
    rng: Optional[np.random.Generator] = None,
    forced_velocities: Optional[Sequence] = None,
) -> BackTimeCycle:
    """
    Trace the back-time cycle of (t, x, v) until t_k <= 0 or k_max bounces.

    `forced_velocities[j]`, when given, replaces the sampled velocity
    v_{j+1}; it must point out of the wall (v.n > 0).
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    _validate_start(domain, t, x, v)
    forced = list(forced_velocities or [])
    if rng is None and len(forced) < k_max - 1:
        raise KineticException("A random stream is required to sample bounce velocities", error_code="invalid_input")

    cycle = BackTimeCycle(nodes=[CycleNode(t=float(t), x=x, v=v)])
    t_k, x_k, v_k = float(t), x, v
    for k in range(1, k_max + 1):
        t_b, x_b = domain.exit_time(x_k, v_k)
        t_next = t_k - float(t_b)
        if not np.isfinite(t_b) or t_next <= 0.0:
            cycle.nodes.append(CycleNode(t=t_next, x=x_b, v=None))
            cycle.terminated_at_initial = True
            return cycle
        x_next = domain.project_to_boundary(x_b)
        if k == k_max:
            cycle.nodes.append(CycleNode(t=t_next, x=x_next, v=None))
            break
        if k - 1 < len(forced):
            v_next = np.asarray(forced[k - 1], dtype=float)
            if not float(np.dot(v_next, domain.normal(x_next))) > 0.0:
                raise KineticException(
                    f"Forced velocity {v_next.tolist()} does not leave the wall at {x_next.tolist()}",
                    error_code="invalid_input",
                )
        else:
            v_next = sample_diffuse_velocity(domain, x_next, rng)
        cycle.nodes.append(CycleNode(t=t_next, x=x_next, v=v_next))
        t_k, x_k, v_k = t_next, x_next, v_next
    return cycle


def escape_fractions(
    domain: BaseDomain,
    t: float,
    x,
    v,
    k_max: int,
    n_samples: int,
    rng: np.random.Generator,
) -> np.ndarray:
    """
    Counts of cycles with t_k > 0 for k = 1..k_max, from one vectorised batch.

    The first leg is deterministic; every later leg draws a fresh diffuse velocity.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    _validate_start(domain, t, x, v)
    counts = np.zeros(k_max, dtype=np.int64)
    t_b, x_b = domain.exit_time(x, v)
    t_1 = t - float(t_b)
    if not np.isfinite(t_b) or t_1 <= 0.0 or n_samples <= 0:
        return counts

    times = np.full(n_samples, t_1)
    points = np.broadcast_to(domain.project_to_boundary(x_b), (n_samples, 3)).copy()
    counts[0] = n_samples
    for k in range(1, k_max):
        velocities = _draw_diffuse(domain, points, rng)
        legs, exits = domain.exit_time(points, velocities)
        times = times - legs
        alive = times > 0.0
        counts[k] = int(np.count_nonzero(alive))
        if counts[k] == 0:
            break
        times = times[alive]
        points = domain.project_to_boundary(exits[alive])
    return counts


def escape_probabilities(
    domain: BaseDomain,
    t: float,
    x,
    v,
    k_max: int,
    n_samples: int,
    seed: int,
    keys: Sequence[int] = (),
    shards: int = 1,
    workers: int = 1,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Monte-Carlo table of p_k for k = 1..k_max with standard errors sqrt(p(1-p)/n).

    Shards draw from independent streams spawned from (seed, *keys) and
    their counts are summed in shard order, so the estimate does not
    depend on `workers`.
    """
    if k_max < 1 or n_samples < 1:
        raise KineticException("k and n_samples must be >= 1", error_code="invalid_input")
    sizes = shard_sizes(n_samples, shards)
    streams = spawn_streams(seed, len(sizes), *keys)

    def run(index: int) -> np.ndarray:
        return escape_fractions(domain, t, x, v, k_max, sizes[index], streams[index])

    if workers > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            partials = list(pool.map(run, range(len(sizes))))
    else:
        partials = [run(i) for i in range(len(sizes))]

    counts = np.zeros(k_max, dtype=np.int64)
    for partial in partials:
        counts += partial
    p = counts / float(n_samples)
    std_err = np.sqrt(p * (1.0 - p) / float(n_samples))
    logger.debug(
        f"Escape table for t={t} on {domain.name}: p_1={p[0]:.4g}, p_{k_max}={p[-1]:.4g}",
        extra={"seed": seed, "n_samples": n_samples, "shards": len(sizes)},
    )
    return p, std_err


def cycle_escape_probability(
    domain: BaseDomain,
    t: float,
    x,
    v,
    k: int,
    n_samples: int,
    seed: int,
    keys: Sequence[int] = (),
    shards: int = 1,
    workers: int = 1,
) -> Tuple[float, float]:
    """Estimate p_k = P(t_k > 0) and its standard error."""
    p, std_err = escape_probabilities(domain, t, x, v, k, n_samples, seed, keys, shards, workers)
    return float(p[k - 1]), float(std_err[k - 1])
