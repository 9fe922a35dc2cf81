"""
Numerical checks of the kernel, gain, cycle, frequency, growth and decay estimates.

Every check returns a plain dict report with a boolean 'passed' and its
fitted constants. Proof constants are always outputs here, never inputs
that a run is judged against.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from collision.kernel import KernelSpec, kernel_envelope
from collision.services import K_apply, gamma, linearized_operator
from core.exceptions import KineticException
from core.reductions import cascade_sum
from core.rng import make_stream
from geometry.domains.base import BaseDomain
from geometry.services import escape_probabilities
from velocity.grid import VelocityGrid, WeightSpec
from velocity.services import nu_of_v, weight_w

logger = logging.getLogger(__name__)

DEFAULT_DRIFT_BOUND = 0.10


# ---------------------------------------------------------------- kernel bounds

def _integral_23(speed: float, alpha: float, varpi: float, n_radial: int = 64, n_polar: int = 96, r_max: float = 24.0) -> float:
    """
    Quadrature of
    {|v-eta| + |v-eta|^-1} e^{-|v-eta|^2/16} e^{-(|v|^2-|eta|^2)^2/(16|v-eta|^2)}
    e^{varpi(|v|^2-|eta|^2)} (1+|eta|)^-alpha over eta, with v = speed e_z.

    Spherical coordinates about v; the integrand is axisymmetric so the azimuth gives 2 pi.
    """
    xr, wr = np.polynomial.legendre.leggauss(n_radial)
    r = 0.5 * r_max * (xr + 1.0)
    wr = 0.5 * r_max * wr
    c, wc = np.polynomial.legendre.leggauss(n_polar)
    R, C = np.meshgrid(r, c, indexing="ij")
    eta_sq = speed**2 + 2.0 * speed * R * C + R**2
    gap = -(2.0 * speed * R * C + R**2)
    integrand = (
        (R + 1.0 / R)
        * np.exp(-(R**2) / 16.0)
        * np.exp(-(gap**2) / (16.0 * R**2))
        * np.exp(varpi * gap)
        * (1.0 + np.sqrt(eta_sq)) ** (-alpha)
        * R**2
    )
    return float(2.0 * np.pi * cascade_sum(integrand * wr[:, None] * wc[None, :]))


def kernel_integral_table(varpi: float, alphas: Sequence[float] = (0.0, 2.0), speeds: Sequence[float] = range(7)) -> Dict:
    """Values of the integrated envelope and the fitted C_alpha for each alpha."""
    table = {}
    for alpha in alphas:
        values = np.array([_integral_23(float(s), float(alpha), varpi) for s in speeds])
        scaled = values * (1.0 + np.asarray(speeds, dtype=float)) ** (1.0 + alpha)
        fit_mask = np.asarray(speeds, dtype=float) <= 5.0
        C_alpha = float(scaled[fit_mask].max())
        violation = float(np.max(np.maximum(scaled / C_alpha - 1.0, 0.0)))
        table[f"{alpha:g}"] = {
            "speeds": [float(s) for s in speeds],
            "values": values.tolist(),
            "fitted_C_alpha": C_alpha,
            "max_envelope_violation": violation,
        }
    return table


def discrete_kernel_ratio(grid: VelocityGrid, kernel: KernelSpec, sample_count: int, seed: int, workers: int = 1) -> float:
    """sup |k_h(v, eta)| / envelope(v, eta) over sampled lattice deltas e_eta and all v != eta."""
    rng = make_stream(seed, 1)
    count = min(int(sample_count), grid.size)
    etas = np.sort(rng.choice(grid.size, size=count, replace=False))
    deltas = np.zeros((count, grid.size))
    deltas[np.arange(count), etas] = 1.0
    k_values = K_apply(grid, kernel, deltas, workers=workers) / grid.quad_weight

    sup_ratio = 0.0
    for row, eta in enumerate(etas):
        others = np.arange(grid.size) != eta
        envelope = kernel_envelope(grid.nodes[others], grid.nodes[eta])
        ratio = np.abs(k_values[row, others]) / envelope
        sup_ratio = max(sup_ratio, float(ratio.max()))
    return sup_ratio


def check_kernel_bounds(
    grid: VelocityGrid,
    spec: WeightSpec,
    kernel: KernelSpec,
    sample_count: int = 16,
    seed: int = 0,
    refine: bool = False,
    drift_bound: float = DEFAULT_DRIFT_BOUND,
    violation_bound: float = 0.05,
    workers: int = 1,
) -> Dict:
    """
    Compare the lattice K kernel with the Grad envelope and fit C_alpha for the integrated envelope.

    Raises:
        KineticException: 'invalid_input' when varpi > 1/64
    """
    if spec.varpi > 1.0 / 64.0:
        raise KineticException(f"Kernel bounds need varpi <= 1/64, got {spec.varpi}", error_code="invalid_input")

    sup_ratio = discrete_kernel_ratio(grid, kernel, sample_count, seed, workers)
    drift = None
    if refine:
        refined = discrete_kernel_ratio(grid.refined(), kernel, sample_count, seed, workers)
        drift = abs(refined / sup_ratio - 1.0) if sup_ratio > 0.0 else None

    table = kernel_integral_table(spec.varpi)
    worst_violation = max(entry["max_envelope_violation"] for entry in table.values())
    decays = table["0"]["values"][-1] < table["0"]["values"][0]
    passed = (
        math.isfinite(sup_ratio)
        and all(math.isfinite(entry["fitted_C_alpha"]) for entry in table.values())
        and worst_violation <= violation_bound
        and decays
        and (drift is None or drift <= drift_bound)
    )
    return {
        "check": "kernel_bounds",
        "passed": bool(passed),
        "sup_ratio_22": sup_ratio,
        "refinement_drift": drift,
        "fitted_C_alpha_23": {alpha: entry["fitted_C_alpha"] for alpha, entry in table.items()},
        "integral_table": table,
        "max_envelope_violation": worst_violation,
        "seed": seed,
        "sample_count": int(sample_count),
    }


# ---------------------------------------------------------------- gain bound

def gain_bound_ratios(grid: VelocityGrid, kernel: KernelSpec, spec: WeightSpec, fields: np.ndarray, workers: int = 1) -> np.ndarray:
    """
    Node-wise ratio |w Gamma+(f, f)| (1+|v|) / (||w f||_Linf (sum (1+|eta|)^4 |e^{varpi|eta|^2} f|^2 dv^3)^{1/2}).

    Zero fields give a zero row.
    """
    fields = np.atleast_2d(np.asarray(fields, dtype=float))
    w = weight_w(spec, grid.nodes)
    speed = np.sqrt(grid.speed_sq)
    gain, _ = gamma(grid, kernel, fields, workers=workers)
    lhs = np.abs(w * gain) * (1.0 + speed)
    sup = np.max(np.abs(w * fields), axis=1)
    moment = np.sqrt(
        cascade_sum((1.0 + speed) ** 4 * (np.exp(spec.varpi * grid.speed_sq) * fields) ** 2, axis=1) * grid.quad_weight
    )
    rhs = (sup * moment)[:, None]
    return np.where(rhs > 0.0, lhs / np.where(rhs > 0.0, rhs, 1.0), 0.0)


def _random_fields(grid: VelocityGrid, spec: WeightSpec, count: int, seed: int) -> np.ndarray:
    rng = make_stream(seed, 2)
    # r / w with r uniform in [-1, 1] keeps ||w f||_Linf <= 1
    return rng.uniform(-1.0, 1.0, size=(count, grid.size)) / weight_w(spec, grid.nodes)


def _sup_gain_ratio(grid, kernel, spec, sample_count, seed, workers, chunk: int = 8) -> Tuple[float, int]:
    fields = _random_fields(grid, spec, sample_count, seed)
    sup_ratio = 0.0
    for start in range(0, sample_count, chunk):
        ratios = gain_bound_ratios(grid, kernel, spec, fields[start:start + chunk], workers)
        sup_ratio = max(sup_ratio, float(ratios.max()))
    return sup_ratio, sample_count


def check_gain_bound(
    grid: VelocityGrid,
    kernel: KernelSpec,
    spec: WeightSpec,
    sample_count: int = 16,
    seed: int = 0,
    refine: bool = False,
    drift_bound: float = DEFAULT_DRIFT_BOUND,
    workers: int = 1,
) -> Dict:
    """Empirical C_beta as the sup ratio over random fields, with its drift under dv halving."""
    sup_ratio, used = _sup_gain_ratio(grid, kernel, spec, sample_count, seed, workers)
    drift = None
    if refine:
        refined, _ = _sup_gain_ratio(grid.refined(), kernel, spec, sample_count, seed, workers)
        drift = abs(refined / sup_ratio - 1.0) if sup_ratio > 0.0 else None
    equilibrium_ratio = float(gain_bound_ratios(grid, kernel, spec, grid.sqrt_mu[None, :], workers).max())
    passed = math.isfinite(sup_ratio) and (drift is None or drift <= drift_bound)
    return {
        "check": "gain_bound",
        "passed": bool(passed),
        "sup_ratio": sup_ratio,
        "equilibrium_ratio": equilibrium_ratio,
        "refinement_drift": drift,
        "samples": used,
        "seed": seed,
    }


# ---------------------------------------------------------------- cycles

def default_cycle_starts(domain: BaseDomain) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Fixed interior starts (x, v) used by the cycle checks."""
    if domain.name == "slab":
        h = getattr(domain, "half_width", 1.0)
        positions = [np.array([0.0, 0.0, 0.0]), np.array([0.5 * h, 0.0, 0.0])]
    else:
        positions = [np.array([0.0, 0.0, 0.0]), np.array([0.5, 0.0, 0.0])]
    velocities = [np.array([1.0, 0.0, 0.0]), np.array([-0.5, 0.5, 0.0]), np.array([0.3, 0.3, 0.9])]
    return [(x, v) for x in positions for v in velocities]


def _log_linear_fit(ks: np.ndarray, p: np.ndarray, std_err: np.ndarray) -> Tuple[Optional[float], Optional[float]]:
    resolvable = (p > 10.0 * std_err) & (p > 0.0) & (p < 1.0)
    if np.count_nonzero(resolvable) < 3:
        return None, None
    fit = stats.linregress(ks[resolvable], np.log(p[resolvable]))
    return float(fit.slope), float(fit.rvalue**2)


def check_cycle_bound(
    domain: BaseDomain,
    T0: float,
    k_list: Sequence[int],
    n_samples: int,
    seed: int,
    starts: Optional[Iterable[Tuple[np.ndarray, np.ndarray]]] = None,
    epsilon: float = 0.01,
    min_r_squared: float = 0.9,
    shards: int = 1,
    workers: int = 1,
) -> Dict:
    """
    Tabulate p_k over fixed starts at t = T0 and test monotonicity, log-linear decay and smallness.

    At least one start must resolve enough p_k to fit a slope; otherwise the
    decay claim is untested and the report fails with error_code 'fit_undefined'.
    """
    if not T0 > 0.0:
        raise KineticException(f"T0 must be > 0, got {T0}", error_code="invalid_input")
    ks = np.array(sorted({int(k) for k in k_list}))
    if ks.size == 0 or ks[0] < 1:
        raise KineticException("k_list needs positive entries", error_code="invalid_input")
    starts = list(starts) if starts is not None else default_cycle_starts(domain)
    k_max = int(ks[-1])

    rows = []
    for index, (x, v) in enumerate(starts):
        p_all, se_all = escape_probabilities(
            domain, T0, x, v, k_max, n_samples, seed, keys=(3, index), shards=shards, workers=workers
        )
        p, se = p_all[ks - 1], se_all[ks - 1]
        monotone = bool(np.all(p[1:] <= p[:-1] + 3.0 * np.maximum(se[1:], se[:-1])))
        slope, r_squared = _log_linear_fit(np.arange(1, k_max + 1), p_all, se_all)
        below = np.nonzero(p_all < epsilon)[0]
        rows.append({
            "x": x.tolist(),
            "v": v.tolist(),
            "p_k": p.tolist(),
            "std_err": se.tolist(),
            "monotone": monotone,
            "log_linear_slope": slope,
            "r_squared": r_squared,
            "smallest_k_below_epsilon": int(below[0] + 1) if below.size else None,
        })

    monotone = all(row["monotone"] for row in rows)
    reaches = all(row["smallest_k_below_epsilon"] is not None for row in rows)
    slopes_ok = all(
        row["log_linear_slope"] is None or (row["log_linear_slope"] < 0.0 and row["r_squared"] >= min_r_squared)
        for row in rows
    )
    fitted = sum(row["log_linear_slope"] is not None for row in rows)
    smallest = [row["smallest_k_below_epsilon"] for row in rows if row["smallest_k_below_epsilon"] is not None]
    report = {
        "check": "cycle_bound",
        "passed": bool(monotone and reaches and slopes_ok and fitted > 0),
        "T0": T0,
        "k_list": ks.tolist(),
        "n_samples": int(n_samples),
        "monotone": monotone,
        "epsilon": epsilon,
        "worst_smallest_k": max(smallest) if smallest else None,
        "fitted_starts": fitted,
        "starts": rows,
        "seed": seed,
    }
    if not fitted:
        report["error_code"] = "fit_undefined"
        logger.warning(f"cycle_bound: no start resolves enough p_k for a slope at T0={T0:g}")
    return report


def fit_cycle_constants(
    domain: BaseDomain,
    T0_list: Sequence[float],
    n_samples: int,
    seed: int,
    epsilon: float = 0.01,
    k_max: int = 200,
    start: Optional[Tuple[np.ndarray, np.ndarray]] = None,
) -> Dict:
    """
    For each T0, the smallest k with p_k < epsilon, C1 = k / T0^{5/4} and
    C2 = -log2(p_k) / T0^{5/4}. A zero estimate only bounds C2 from below by
    log2(n_samples) / T0^{5/4} and is flagged as such.
    """
    x, v = start if start is not None else default_cycle_starts(domain)[0]
    entries = []
    for index, T0 in enumerate(T0_list):
        p, _ = escape_probabilities(domain, float(T0), x, v, k_max, n_samples, seed, keys=(4, index))
        below = np.nonzero(p < epsilon)[0]
        scale = float(T0) ** 1.25
        if below.size == 0:
            entries.append({"T0": float(T0), "k": None, "C1": None, "C2": None, "C2_lower_bound": False})
            continue
        k = int(below[0] + 1)
        p_k = float(p[k - 1])
        lower_bound = p_k == 0.0
        c2 = (math.log2(n_samples) if lower_bound else -math.log2(p_k)) / scale
        entries.append({"T0": float(T0), "k": k, "C1": k / scale, "C2": c2, "C2_lower_bound": lower_bound})
    c1_values = [e["C1"] for e in entries if e["C1"] is not None]
    c2_values = [e["C2"] for e in entries if e["C2"] is not None]
    return {
        "check": "cycle_constants",
        "passed": bool(c1_values),
        "entries": entries,
        "C1": max(c1_values) if c1_values else None,
        "C2": min(c2_values) if c2_values else None,
        "epsilon": epsilon,
        "seed": seed,
    }


# ---------------------------------------------------------------- run diagnostics

def _require(rows: Sequence[dict], columns: Sequence[str]) -> None:
    if not rows:
        raise KineticException("No diagnostics rows to check", error_code="incomplete_run")
    missing = [c for c in columns if c not in rows[0]]
    if missing:
        raise KineticException(f"Diagnostics lack columns: {', '.join(missing)}", error_code="incomplete_run")


def t_tilde(nu0: float, M0: float, c: float = 4.0) -> float:
    """(2/nu0) ln(c M0), or 0 when c M0 <= 1."""
    product = c * M0
    return (2.0 / nu0) * math.log(product) if product > 1.0 else 0.0


def check_R_lower_bound(
    rows: Sequence[dict],
    nu0: float,
    M0: Optional[float] = None,
    c_tilde: float = 4.0,
    ratio_floor: float = 0.5,
    gauss_threshold: float = 0.1,
) -> Dict:
    """
    Minimum of R(f)/nu over t >= t_tilde, and whether the Gaussian-L1 norm fell below its threshold by t_tilde.

    A run that ends before t_tilde fails with error_code 'incomplete_run'; the report still carries t_tilde.
    """
    _require(rows, ("t", "min_R_over_nu", "gauss_l1v_sup", "winf"))
    M0 = float(rows[0]["winf"]) if M0 is None else float(M0)
    start = t_tilde(nu0, M0, c_tilde)
    after = [row["min_R_over_nu"] for row in rows if row["t"] >= start - 1e-12]
    before = [row["gauss_l1v_sup"] for row in rows if row["t"] <= start + 1e-12]
    min_ratio = min(after) if after else None
    report = {
        "check": "R_lower_bound",
        "passed": bool(min_ratio is not None and min_ratio >= ratio_floor),
        "t_tilde": start,
        "last_time": float(rows[-1]["t"]),
        "M0": M0,
        "c_tilde": c_tilde,
        "min_ratio_after_t_tilde": min_ratio,
        "ratio_floor": ratio_floor,
        "gauss_l1v_sup_trace": [[row["t"], row["gauss_l1v_sup"]] for row in rows],
        "gauss_below_threshold_by_t_tilde": bool(before and min(before) < gauss_threshold),
        "gauss_threshold": gauss_threshold,
    }
    if not after:
        report["error_code"] = "incomplete_run"
        logger.warning(f"R_lower_bound: run ends at t={report['last_time']:.4g} before t_tilde={start:.4g}")
    return report


def check_l2_growth(rows: Sequence[dict], safety: float = 2.0, zero_floor: float = 1e-8) -> Dict:
    """
    Smallest c with ||f(t)|| <= exp(c M t) ||f_0||, M = sup_t ||w f(t)||_Linf.

    A zero initial norm admits no growth constant; later norms above
    `zero_floor` are then reported as a defect.
    """
    _require(rows, ("t", "l2", "winf"))
    t0 = rows[0]["t"]
    l2_0 = rows[0]["l2"]
    M_run = max(row["winf"] for row in rows)
    later = [(row["t"] - t0, row["l2"]) for row in rows[1:] if row["t"] > t0]
    defect = False
    growth = 0.0
    if l2_0 == 0.0:
        defect = any(l2 > zero_floor for _, l2 in later)
    elif M_run > 0.0:
        for elapsed, l2 in later:
            if l2 > 0.0:
                growth = max(growth, math.log(l2 / l2_0) / (M_run * elapsed))
    violated = defect or (l2_0 > 0.0 and any(
        l2 > math.exp(safety * growth * M_run * elapsed) * l2_0 * (1.0 + 1e-12) for elapsed, l2 in later
    ))
    return {
        "check": "l2_growth",
        "passed": bool(math.isfinite(growth) and not violated),
        "fitted_growth_constant": growth,
        "M_run": M_run,
        "safety_factor": safety,
        "violated": bool(violated),
        "zero_initial_defect": bool(defect),
    }


def check_vacuum_relaxation(rows: Sequence[dict], density_time: float = 0.5) -> Dict:
    """
    Refilling of a near-vacuum region: the smallest cell density is positive
    at every output time from `density_time` on, and ||w f||_Linf ends below
    its initial value.
    """
    _require(rows, ("t", "min_density", "winf"))
    later = [(row["t"], row["min_density"]) for row in rows if row["t"] >= density_time - 1e-12]
    report = {
        "check": "vacuum_relaxation",
        "density_time": density_time,
        "initial_min_density": float(rows[0]["min_density"]),
        "min_density_trace": [[row["t"], row["min_density"]] for row in rows],
        "initial_winf": float(rows[0]["winf"]),
        "final_winf": float(rows[-1]["winf"]),
        "winf_decreased": bool(rows[-1]["winf"] < rows[0]["winf"]),
    }
    if not later:
        report.update({"passed": False, "density_positive": False, "error_code": "incomplete_run"})
        logger.warning(f"vacuum_relaxation: run ends at t={rows[-1]['t']:.4g} before t={density_time:.4g}")
        return report
    report["density_positive"] = all(density > 0.0 for _, density in later)
    report["min_density_after"] = float(min(density for _, density in later))
    report["passed"] = bool(report["density_positive"] and report["winf_decreased"])
    return report


@dataclass
class DecayReport:
    fitted_rate: float
    fit_window: Tuple[float, float]
    r_squared: float
    nu0: float
    theta1_formula: float
    below_delta_time: Optional[float]
    intercept: float
    envelope_prefactor: Optional[float] = None
    envelope_holds: Optional[bool] = None

    def as_dict(self) -> dict:
        data = asdict(self)
        data["fit_window"] = list(self.fit_window)
        return data

    def envelope(self, t) -> np.ndarray:
        return np.exp(self.intercept - self.fitted_rate * np.asarray(t, dtype=float))


def fit_decay_rate(
    rows: Sequence[dict],
    fit_window: Tuple[float, float],
    nu0: float,
    delta: Optional[float] = None,
    linear: bool = False,
) -> DecayReport:
    """
    Least-squares rate of ln ||w f(t)||_Linf over the window.

    For a linear run the e^{-nu0 t / 2} envelope is also tested with the
    smallest prefactor that covers the whole trace.

    Raises:
        KineticException: 'fit_undefined' for non-positive values or fewer than two points in the window
    """
    _require(rows, ("t", "winf"))
    t_a, t_b = float(fit_window[0]), float(fit_window[1])
    window = [(row["t"], row["winf"]) for row in rows if t_a - 1e-12 <= row["t"] <= t_b + 1e-12]
    if len(window) < 2:
        raise KineticException(
            f"Fit window [{t_a}, {t_b}] holds {len(window)} points", error_code="fit_undefined"
        )
    times = np.array([t for t, _ in window])
    values = np.array([value for _, value in window])
    if np.any(values <= 0.0):
        raise KineticException("Non-positive ||w f|| inside the fit window", error_code="fit_undefined")
    fit = stats.linregress(times, np.log(values))
    rate = float(-fit.slope)

    below = None
    if delta is not None:
        hits = [row["t"] for row in rows if row["winf"] < delta]
        below = float(hits[0]) if hits else None

    prefactor = holds = None
    if linear:
        all_t = np.array([row["t"] for row in rows])
        all_v = np.array([row["winf"] for row in rows])
        prefactor = float(np.max(all_v * np.exp(0.5 * nu0 * all_t)))
        holds = bool(rate >= 0.5 * nu0 - 0.1)

    return DecayReport(
        fitted_rate=rate,
        fit_window=(t_a, t_b),
        r_squared=float(min(max(fit.rvalue**2, 0.0), 1.0)),
        nu0=float(nu0),
        theta1_formula=min(rate, nu0 / 16.0),
        below_delta_time=below,
        intercept=float(fit.intercept),
        envelope_prefactor=prefactor,
        envelope_holds=holds,
    )


# ---------------------------------------------------------------- null space

def collision_invariants(grid: VelocityGrid) -> Dict[str, np.ndarray]:
    s = grid.sqrt_mu
    return {
        "sqrt_mu": s,
        "v1_sqrt_mu": grid.nodes[:, 0] * s,
        "v2_sqrt_mu": grid.nodes[:, 1] * s,
        "v3_sqrt_mu": grid.nodes[:, 2] * s,
        "energy_sqrt_mu": grid.speed_sq * s,
    }


def check_equilibrium_nullspace(
    grid: VelocityGrid,
    kernel: KernelSpec,
    tolerance: float = 1e-3,
    seed: int = 0,
    workers: int = 1,
) -> Dict:
    """Relative residuals ||(nu - K) g|| / ||g|| for the five invariants and one random control."""
    invariants = collision_invariants(grid)
    control = make_stream(seed, 5).standard_normal(grid.size)
    batch = np.stack(list(invariants.values()) + [control])
    residual = linearized_operator(grid, kernel, batch, workers=workers)
    norms = np.sqrt(cascade_sum(residual**2, axis=1)) / np.sqrt(cascade_sum(batch**2, axis=1))
    residuals = {name: float(norms[i]) for i, name in enumerate(invariants)}
    return {
        "check": "equilibrium_nullspace",
        "passed": bool(max(residuals.values()) <= tolerance),
        "residuals": residuals,
        "control_residual": float(norms[-1]),
        "tolerance": tolerance,
        "seed": seed,
    }


def empirical_smallness_boundary(results: Iterable[Tuple[float, bool]]) -> Optional[float]:
    """Largest ||f_0||_L2 that passed with every smaller tested value also passing."""
    boundary = None
    for l2, passed in sorted(results, key=lambda item: item[0]):
        if not passed:
            break
        boundary = float(l2)
    return boundary


def nu_floor(grid: VelocityGrid, kernel: KernelSpec) -> float:
    return nu_of_v(grid, kernel)[1]
