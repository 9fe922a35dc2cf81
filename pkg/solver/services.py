"""
Picard iteration, local solves and the global march.

One step solves the linear transport problem with frequency R and gain
source Q+(F^m, F^m) along backward characteristics, repeating until
successive iterates agree in the weighted sup norm. The source is frozen at
the previous iterate F^m; R is taken at the midpoint state between the foot
value at t_n and F^m.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np

from collision.kernel import KernelSpec
from collision.services import R_of_field, corrected_gain, equilibrium_correction
from core.exceptions import KineticException, PositivityViolation, StepRejected
from velocity.grid import WeightSpec
from velocity.services import compute_norms, moments, nu_of_v, relative_entropy, weight_w, weighted_sup
from .config import SolverConfig, StepReport
from .field import DistributionField
from .transport import inflow_slices, start_values, trace_characteristics, transport_duhamel_step

logger = logging.getLogger(__name__)

NEGATIVITY_FLOOR = -1e-12


@dataclass(frozen=True)
class Physics:
    """Kernel and weight bundle the solver threads through every step."""

    kernel: KernelSpec
    weight: WeightSpec


def conservation_projection(field_: DistributionField, target_mass: Optional[float] = None) -> DistributionField:
    """
    Rescale F by target_mass / current_mass.

    Raises:
        KineticException: 'degenerate_state' when the current mass is zero
    """
    target = field_.target_mass if target_mass is None else float(target_mass)
    if not np.isfinite(target):
        raise KineticException("Conservation projection needs a target mass", error_code="invalid_input")
    current = field_.mass
    if current == 0.0:
        raise KineticException("Cannot project a field with zero mass", error_code="degenerate_state")
    return field_.evolve(field_.values * (target / current), field_.time_stamp)


def _weighted_difference(a: np.ndarray, b: np.ndarray, field_: DistributionField, w: np.ndarray) -> float:
    return float(np.max(np.abs(a - b) * (w / field_.velocity.sqrt_mu)))


def _check_positivity(values: np.ndarray, time: float) -> Tuple[np.ndarray, int]:
    minimum = float(values.min())
    if minimum < NEGATIVITY_FLOOR:
        cell = int(np.unravel_index(np.argmin(values), values.shape)[0])
        raise PositivityViolation(
            f"Distribution dropped to {minimum:.3e} at t={time:.6g}",
            context={"time": time, "min_F": minimum, "cell": cell, "field_slice": values[cell].tolist()},
        )
    negatives = int(np.count_nonzero(values < 0.0))
    if negatives:
        values = np.maximum(values, 0.0)
    return values, negatives


def picard_iterate(
    field_: DistributionField,
    config: SolverConfig,
    dt: float,
    physics: Physics,
) -> Tuple[DistributionField, StepReport]:
    """
    Solve one step of length dt by Picard iteration.

    Raises:
        StepRejected: No convergence within picard_max_iters sweeps
        PositivityViolation: A value dropped below -1e-12
    """
    grid = field_.velocity
    kernel = physics.kernel
    w = weight_w(physics.weight, grid.nodes)
    nu, _ = nu_of_v(grid, kernel)
    if config.gain_renormalization and config.mode == "nonlinear":
        equilibrium_correction(grid, kernel, config.threads)

    chars = trace_characteristics(field_.space, grid, dt)
    inflow = inflow_slices(field_, lattice=config.lattice_wall_constant)
    start = start_values(field_, chars, inflow)
    t_next = field_.time_stamp + dt

    if config.mode == "linear":
        R = np.broadcast_to(nu, start.shape)
        source = np.broadcast_to(grid.mu * nu, start.shape)
        updated, factor = transport_duhamel_step(field_, R, source, dt, inflow, chars=chars, start=start)
        values, clipped = _check_positivity(updated.values, t_next)
        return _finish(field_, updated.evolve(values, t_next), config, physics, dt, 1, [], factor, clipped)

    iterate = field_.values
    differences: List[float] = []
    clipped_total = 0
    for sweep in range(1, config.picard_max_iters + 1):
        R = R_of_field(grid, kernel, 0.5 * (start + iterate))
        source = corrected_gain(
            grid, kernel, iterate, workers=config.threads, renormalize=config.gain_renormalization
        )
        updated, factor = transport_duhamel_step(field_, R, source, dt, inflow, chars=chars, start=start)
        values, clipped = _check_positivity(updated.values, t_next)
        clipped_total += clipped
        difference = _weighted_difference(values, iterate, field_, w)
        differences.append(difference)
        iterate = values
        if difference <= config.picard_tol:
            return _finish(
                field_, field_.evolve(iterate, t_next), config, physics, dt, sweep, differences, factor, clipped_total
            )

    raise StepRejected(
        f"Picard iteration did not reach tol {config.picard_tol:g} in {config.picard_max_iters} sweeps (dt={dt:.4g})",
        context={"time": field_.time_stamp, "dt": dt, "differences": differences},
    )


def _contraction_ratio(differences: List[float]) -> float:
    if len(differences) < 2 or differences[-2] == 0.0:
        return 0.0
    return differences[-1] / differences[-2]


def _finish(before, after, config, physics, dt, sweeps, differences, factor, clipped) -> Tuple[DistributionField, StepReport]:
    grid = after.velocity
    target = before.target_mass
    mass_drift = (after.mass - target) / target if np.isfinite(target) and target != 0.0 else 0.0
    after = after.with_target_mass(target)
    if config.conservation_projection and np.isfinite(target) and after.mass > 0.0:
        after = conservation_projection(after)
    nu, _ = nu_of_v(grid, physics.kernel)
    R_after = R_of_field(grid, physics.kernel, after.values)
    report = StepReport(
        time=after.time_stamp,
        dt=dt,
        iteration_count=sweeps,
        final_contraction_ratio=_contraction_ratio(differences),
        mass_drift=float(mass_drift),
        min_F=float(after.values.min()),
        norms=compute_norms(after.values, grid, physics.weight, after.space.dx),
        integrating_factor_range=(float(factor.min()), float(factor.max())),
        min_R_over_nu=float(np.min(R_after / nu)),
        relative_entropy=relative_entropy(after.values, grid, after.space.dx),
        min_density=float(moments(after.values, grid).density.min()),
        clipped_negatives=clipped,
        differences=differences,
    )
    if clipped:
        logger.warning(
            f"Clipped {clipped} round-off negatives at t={after.time_stamp:.6g}",
            extra={"time": after.time_stamp},
        )
    logger.debug(
        f"Step accepted at t={after.time_stamp:.6g} after {sweeps} sweeps",
        extra={"dt": dt, "contraction_ratio": report.final_contraction_ratio},
    )
    return after, report


def substep_length(field_: DistributionField, config: SolverConfig, interval: float) -> Tuple[float, int]:
    """Split `interval` into equal substeps no longer than min(config.dt, 0.5 dx / R_v)."""
    cap = 0.5 * field_.space.dx / field_.velocity.extent
    if config.dt is not None:
        cap = min(cap, config.dt)
    count = max(1, int(math.ceil(interval / cap - 1e-12)))
    return interval / count, count


def _advance(field_, config, physics, dt, halvings, reports) -> DistributionField:
    try:
        field_, report = picard_iterate(field_, config, dt, physics)
        reports.append(report)
        return field_
    except StepRejected as exc:
        if halvings >= config.max_halvings:
            logger.error(
                f"Step rejected after {halvings} halvings at t={field_.time_stamp:.6g}",
                exc_info=True,
                extra=exc.context,
            )
            raise
        logger.warning(
            f"Step rejected at t={field_.time_stamp:.6g}; halving dt to {dt / 2:.4g}",
            extra={"dt": dt, "halvings": halvings + 1},
        )
        field_ = _advance(field_, config, physics, dt / 2.0, halvings + 1, reports)
        return _advance(field_, config, physics, dt / 2.0, halvings + 1, reports)


def solve_local(
    field_: DistributionField,
    config: SolverConfig,
    physics: Physics,
    horizon: Optional[float] = None,
) -> Tuple[DistributionField, List[StepReport]]:
    """
    Advance by t_hat_0 = 1 / (C_hat_rho (1 + ||w f||_Linf)), or less if `horizon` is shorter.

    Returns:
        (field at the end of the interval, accepted StepReports in order)
    """
    h_sup = weighted_sup(field_.perturbation, field_.velocity, physics.weight)
    interval = config.t_hat_0(h_sup)
    if horizon is not None:
        interval = min(interval, horizon)
    dt, count = substep_length(field_, config, interval)
    reports: List[StepReport] = []
    for _ in range(count):
        field_ = _advance(field_, config, physics, dt, 0, reports)
    return field_, reports


@dataclass
class TimeConstants:
    """Proof-shaped time constants evaluated with config stand-ins; reported, never asserted."""

    M0: float
    nu0: float
    t_tilde: float
    log_M_bar: float
    M_bar: float
    T0: float
    t_star: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def global_time_constants(
    M0: float,
    nu0: float,
    c_tilde: float = 4.0,
    C4: float = 1.0,
    delta: float = 1e-3,
    C_hat_rho: float = 10.0,
) -> TimeConstants:
    """
    t_tilde = (2/nu0) ln(c M0) (0 when c M0 <= 1),
    M_bar = 4 C4^2 M0 exp{2 nu0 t_tilde + (8/nu0) C4 M0 e^{2 nu0 t_tilde}},
    T0 = (16/nu0) [ln M_bar + |ln delta|], t_star = 1 / (C_hat_rho (1 + M_bar / (2 C4))).

    M_bar is carried as a logarithm since it overflows for moderate M0.
    """
    if not nu0 > 0.0:
        raise KineticException(f"nu0 must be > 0, got {nu0}", error_code="invalid_input")
    product = c_tilde * M0
    t_tilde = (2.0 / nu0) * math.log(product) if product > 1.0 else 0.0
    growth = math.exp(2.0 * nu0 * t_tilde)
    if M0 > 0.0:
        log_M_bar = math.log(4.0 * C4**2 * M0) + 2.0 * nu0 * t_tilde + (8.0 / nu0) * C4 * M0 * growth
    else:
        log_M_bar = -math.inf
    M_bar = math.exp(log_M_bar) if log_M_bar < 700.0 else math.inf
    T0 = (16.0 / nu0) * (max(log_M_bar, 0.0) + abs(math.log(delta)))
    t_star = 1.0 / (C_hat_rho * (1.0 + M_bar / (2.0 * C4))) if math.isfinite(M_bar) else 0.0
    return TimeConstants(M0=M0, nu0=nu0, t_tilde=t_tilde, log_M_bar=log_M_bar, M_bar=M_bar, T0=T0, t_star=t_star)


DIAGNOSTIC_COLUMNS = (
    "t",
    "mass",
    "l2",
    "winf",
    "gauss_l1v_sup",
    "min_F",
    "min_R_over_nu",
    "contraction_ratio",
    "relative_entropy",
    "min_density",
)


@dataclass
class MarchResult:
    rows: List[dict] = field(default_factory=list)
    reports: List[StepReport] = field(default_factory=list)
    final_field: Optional[DistributionField] = None
    below_delta_time: Optional[float] = None
    sup_winf: float = 0.0
    initial_winf: float = 0.0
    initial_l2: float = 0.0
    clipped_negatives: int = 0
    time_constants: Optional[TimeConstants] = None

    def summary(self) -> dict:
        return {
            "steps": len(self.reports),
            "final_time": self.final_field.time_stamp if self.final_field is not None else 0.0,
            "below_delta_time": self.below_delta_time,
            "sup_winf": self.sup_winf,
            "initial_winf": self.initial_winf,
            "initial_l2": self.initial_l2,
            "clipped_negatives": self.clipped_negatives,
            "max_contraction_ratio": max((r.final_contraction_ratio for r in self.reports), default=0.0),
            "max_iterations": max((r.iteration_count for r in self.reports), default=0),
            "time_constants": self.time_constants.as_dict() if self.time_constants else None,
        }


def _initial_row(field_: DistributionField, physics: Physics) -> dict:
    grid = field_.velocity
    norms = compute_norms(field_.values, grid, physics.weight, field_.space.dx)
    nu, _ = nu_of_v(grid, physics.kernel)
    R = R_of_field(grid, physics.kernel, field_.values)
    return {
        "t": field_.time_stamp,
        "mass": norms.mass,
        "l2": norms.l2,
        "winf": norms.winf,
        "gauss_l1v_sup": norms.gauss_l1v_sup,
        "min_F": norms.min_value,
        "min_R_over_nu": float(np.min(R / nu)),
        "contraction_ratio": 0.0,
        "relative_entropy": relative_entropy(field_.values, grid, field_.space.dx),
        "min_density": float(moments(field_.values, grid).density.min()),
    }


def _report_row(report: StepReport) -> dict:
    return {
        "t": report.time,
        "mass": report.norms.mass,
        "l2": report.norms.l2,
        "winf": report.norms.winf,
        "gauss_l1v_sup": report.norms.gauss_l1v_sup,
        "min_F": report.min_F,
        "min_R_over_nu": report.min_R_over_nu,
        "contraction_ratio": report.final_contraction_ratio,
        "relative_entropy": report.relative_entropy,
        "min_density": report.min_density,
    }


def march_global(
    field_: DistributionField,
    config: SolverConfig,
    physics: Physics,
    output_interval: float = 0.0,
    c_tilde: float = 4.0,
    C4: float = 1.0,
) -> MarchResult:
    """
    Chain local solves to T_end, recording diagnostics every `output_interval` (every step when 0).

    Raises:
        KineticException: 'invalid_input' when ||w f_0|| exceeds M0_cap; solver errors propagate
            with the failure time added to their context
    """
    if not config.T_end > 0.0:
        raise KineticException(f"T_end must be > 0, got {config.T_end}", error_code="invalid_input")
    if not np.isfinite(field_.target_mass):
        field_ = field_.with_target_mass(field_.mass)

    result = MarchResult()
    first = _initial_row(field_, physics)
    result.rows.append(first)
    result.initial_winf = first["winf"]
    result.initial_l2 = first["l2"]
    result.sup_winf = first["winf"]
    if first["winf"] > config.M0_cap:
        raise KineticException(
            f"Initial ||w f|| = {first['winf']:.4g} exceeds M0_cap {config.M0_cap:g}",
            error_code="invalid_input",
        )
    if first["winf"] < config.delta_target:
        result.below_delta_time = field_.time_stamp

    _, nu0 = nu_of_v(field_.velocity, physics.kernel)
    result.time_constants = global_time_constants(
        first["winf"], nu0, c_tilde=c_tilde, C4=C4, delta=config.delta_target, C_hat_rho=config.C_hat_rho
    )
    logger.info(
        f"March started: T_end={config.T_end:g}, ||wf0||={first['winf']:.4g}, mode={config.mode}",
        extra={"n_cells": field_.space.n_cells, "n_velocity": field_.velocity.size},
    )

    next_output = field_.time_stamp + output_interval
    start_time = field_.time_stamp
    while field_.time_stamp < start_time + config.T_end - 1e-12:
        horizon = start_time + config.T_end - field_.time_stamp
        try:
            field_, reports = solve_local(field_, config, physics, horizon=horizon)
        except KineticException as exc:
            exc.context.setdefault("time", field_.time_stamp)
            exc.context.setdefault("field_slice", field_.values[int(np.argmin(field_.values.min(axis=1)))].tolist())
            logger.error(f"March aborted at t={field_.time_stamp:.6g}: {exc.message}", exc_info=True)
            raise
        for report in reports:
            result.reports.append(report)
            result.clipped_negatives += report.clipped_negatives
            result.sup_winf = max(result.sup_winf, report.norms.winf)
            if result.below_delta_time is None and report.norms.winf < config.delta_target:
                result.below_delta_time = report.time
            if report.time >= next_output - 1e-12:
                result.rows.append(_report_row(report))
                next_output = report.time + output_interval

    if result.rows[-1]["t"] != field_.time_stamp and result.reports:
        result.rows.append(_report_row(result.reports[-1]))
    result.final_field = field_
    logger.info(
        f"March finished at t={field_.time_stamp:.6g} after {len(result.reports)} steps",
        extra={"below_delta_time": result.below_delta_time, "sup_winf": result.sup_winf},
    )
    return result
