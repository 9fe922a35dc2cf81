"""
Check registry: maps check names to runners built from a Scenario.

Static checks need only the scenario. Trace checks read the diagnostics
rows of a finished march and fail with 'incomplete_run' without them.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence

from core.exceptions import KineticException
from scenarios.scenario import Scenario
from solver.initial_data import initial_field
from solver.services import Physics, march_global
from velocity.services import compute_norms
from .services import (
    check_cycle_bound,
    check_equilibrium_nullspace,
    check_gain_bound,
    check_kernel_bounds,
    check_l2_growth,
    check_R_lower_bound,
    check_vacuum_relaxation,
    empirical_smallness_boundary,
    fit_cycle_constants,
    fit_decay_rate,
    nu_floor,
)

logger = logging.getLogger(__name__)

STATIC_CHECKS = (
    "kernel_bounds",
    "gain_bound",
    "cycle_bound",
    "cycle_constants",
    "equilibrium_nullspace",
)
TRACE_CHECKS = ("R_lower_bound", "l2_growth", "decay_rate", "vacuum_relaxation")
# march their own initial data, so they run under verify as well as run
SWEEP_CHECKS = ("smallness_boundary",)
CYCLE_CHECKS = ("cycle_bound", "cycle_constants")

DECAY_MIN_R_SQUARED = 0.95


@dataclass
class CheckContext:
    """Everything a runner may read; rows are None when nothing was marched."""

    scenario: Scenario
    rows: Optional[List[dict]] = None
    workers: int = 1

    @property
    def seed(self) -> int:
        return self.scenario.scenario.seed

    def require_rows(self, check: str) -> List[dict]:
        if not self.rows:
            raise KineticException(
                f"Check {check} needs a marched run",
                error_code="incomplete_run",
                context={"check": check},
            )
        return self.rows


def _kernel_bounds(ctx: CheckContext) -> Dict:
    s, v = ctx.scenario, ctx.scenario.verify
    return check_kernel_bounds(
        s.velocity_grid(), s.weight, s.kernel(),
        sample_count=v.sample_count, seed=ctx.seed, refine=v.refine,
        drift_bound=v.drift_bound, workers=ctx.workers,
    )


def _gain_bound(ctx: CheckContext) -> Dict:
    s, v = ctx.scenario, ctx.scenario.verify
    return check_gain_bound(
        s.velocity_grid(), s.kernel(), s.weight,
        sample_count=v.sample_count, seed=ctx.seed, refine=v.refine,
        drift_bound=v.drift_bound, workers=ctx.workers,
    )


def _cycle_bound(ctx: CheckContext) -> Dict:
    v = ctx.scenario.verify
    return check_cycle_bound(
        ctx.scenario.domain(), v.T0, v.k_list, v.n_samples, ctx.seed,
        epsilon=v.epsilon, shards=v.shards, workers=ctx.workers,
    )


def _cycle_constants(ctx: CheckContext) -> Dict:
    v = ctx.scenario.verify
    return fit_cycle_constants(ctx.scenario.domain(), v.T0_list, v.n_samples, ctx.seed, epsilon=v.epsilon)


def _equilibrium_nullspace(ctx: CheckContext) -> Dict:
    s = ctx.scenario
    return check_equilibrium_nullspace(
        s.velocity_grid(), s.kernel(), tolerance=s.verify.nullspace_tol, seed=ctx.seed, workers=ctx.workers
    )


def _R_lower_bound(ctx: CheckContext) -> Dict:
    s, v = ctx.scenario, ctx.scenario.verify
    rows = ctx.require_rows("R_lower_bound")
    return check_R_lower_bound(
        rows, nu_floor(s.velocity_grid(), s.kernel()),
        c_tilde=v.c_tilde, ratio_floor=v.ratio_floor, gauss_threshold=v.gauss_threshold,
    )


def _l2_growth(ctx: CheckContext) -> Dict:
    return check_l2_growth(ctx.require_rows("l2_growth"), safety=ctx.scenario.verify.l2_safety)


def _decay_rate(ctx: CheckContext) -> Dict:
    s, v = ctx.scenario, ctx.scenario.verify
    rows = ctx.require_rows("decay_rate")
    linear = s.solver.mode == "linear"
    fit = fit_decay_rate(
        rows,
        (v.fit_window_start, v.fit_window_end),
        nu_floor(s.velocity_grid(), s.kernel()),
        delta=s.solver.delta_target,
        linear=linear,
    )
    passed = fit.fitted_rate > 0.0 and fit.r_squared >= DECAY_MIN_R_SQUARED and fit.envelope_holds is not False
    return {"check": "decay_rate", "passed": bool(passed), "min_r_squared": DECAY_MIN_R_SQUARED, **fit.as_dict()}


def _vacuum_relaxation(ctx: CheckContext) -> Dict:
    rows = ctx.require_rows("vacuum_relaxation")
    return check_vacuum_relaxation(rows, density_time=ctx.scenario.verify.density_time)


def _smallness_boundary(ctx: CheckContext) -> Dict:
    """
    March small_perturbation at each listed amplitude with the scenario's
    solver settings and score each march with the R lower bound check.
    """
    s, v = ctx.scenario, ctx.scenario.verify
    grid, space = s.velocity_grid(), s.spatial_grid()
    physics = Physics(kernel=s.kernel(), weight=s.weight)
    nu0 = nu_floor(grid, physics.kernel)
    entries = []
    for amplitude in v.amplitudes:
        field_ = initial_field("small_perturbation", space, grid, s.weight, amplitude=amplitude)
        entry = {
            "amplitude": amplitude,
            "l2_0": compute_norms(field_.values, grid, s.weight, space.dx).l2,
        }
        try:
            result = march_global(
                field_, s.solver, physics, output_interval=s.output.interval, c_tilde=v.c_tilde, C4=v.C4
            )
        except KineticException as e:
            logger.warning(f"Sweep march at amplitude {amplitude:g} aborted: {e.message}")
            entry.update({"passed": False, "error_code": e.error_code})
            entries.append(entry)
            continue
        bound = check_R_lower_bound(
            result.rows, nu0, c_tilde=v.c_tilde, ratio_floor=v.ratio_floor, gauss_threshold=v.gauss_threshold
        )
        entry.update({
            "passed": bound["passed"],
            "t_tilde": bound["t_tilde"],
            "min_ratio_after_t_tilde": bound["min_ratio_after_t_tilde"],
        })
        if "error_code" in bound:
            entry["error_code"] = bound["error_code"]
        entries.append(entry)
    boundary = empirical_smallness_boundary((entry["l2_0"], entry["passed"]) for entry in entries)
    return {
        "check": "smallness_boundary",
        "passed": boundary is not None,
        "boundary_l2": boundary,
        "ratio_floor": v.ratio_floor,
        "entries": entries,
    }


CHECK_RUNNERS: Dict[str, Callable[[CheckContext], Dict]] = {
    "kernel_bounds": _kernel_bounds,
    "gain_bound": _gain_bound,
    "cycle_bound": _cycle_bound,
    "cycle_constants": _cycle_constants,
    "equilibrium_nullspace": _equilibrium_nullspace,
    "R_lower_bound": _R_lower_bound,
    "l2_growth": _l2_growth,
    "decay_rate": _decay_rate,
    "vacuum_relaxation": _vacuum_relaxation,
    "smallness_boundary": _smallness_boundary,
}


def run_check(name: str, ctx: CheckContext) -> Dict:
    """
    Run one named check and return its report.

    Numerical failures inside the check become a failed report carrying the
    error code; anything else propagates.
    """
    if name not in CHECK_RUNNERS:
        supported = ", ".join(CHECK_RUNNERS.keys())
        raise KineticException(
            f"Unknown check: {name}. Supported checks: {supported}",
            error_code="config_error",
        )
    try:
        report = CHECK_RUNNERS[name](ctx)
    except KineticException as e:
        logger.warning(f"Check {name} could not complete: {e.message}", extra={"error_code": e.error_code})
        report = {"check": name, "passed": False, "error_code": e.error_code, "error": e.message}
    report.setdefault("seed", ctx.seed)
    logger.info(f"Check {name} finished: {'pass' if report['passed'] else 'fail'}", extra={"seed": ctx.seed})
    return report


def run_checks(names: Sequence[str], ctx: CheckContext) -> Dict[str, Dict]:
    """Run checks in the given order; report order is the input order."""
    return {name: run_check(name, ctx) for name in names}
