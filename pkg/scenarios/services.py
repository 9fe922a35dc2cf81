"""
Run orchestration: march a scenario, run its checks and write the artifacts.

A run directory holds diagnostics.csv (when something was marched),
checks/<name>.json per check, manifest.json and, after an abort,
abort_dump.json. Floats in CSV files are written with 17 significant digits.
"""

import csv
import json
import logging
import math
import os
import subprocess
import tempfile
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
from django.conf import settings
from django.db import transaction
from django.utils import timezone

from collision.services import collision_defects
from core.exceptions import KineticException
from solver.initial_data import initial_field
from solver.services import DIAGNOSTIC_COLUMNS, MarchResult, Physics, march_global
from velocity.services import tol_grid
from verify.models import CheckReport
from verify.runners import CYCLE_CHECKS, STATIC_CHECKS, SWEEP_CHECKS, CheckContext, run_checks
from .loader import config_hash, serialize_scenario
from .models import SimulationRun
from .scenario import Scenario

logger = logging.getLogger(__name__)

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_RUNTIME_ABORT = 3

COMMANDS = ("run", "verify", "cycles")
PLOT_SERIES = ("l2", "winf", "gauss_l1v_sup")

# raised while building the run from a valid scenario; mapped to exit 2
SETUP_ERROR_CODES = {"config_error", "unsupported_domain", "invalid_input"}

DIAGNOSTICS_FILE = "diagnostics.csv"
MANIFEST_FILE = "manifest.json"
ABORT_FILE = "abort_dump.json"
PLOT_FILE = "plot_data.csv"
CHECKS_DIR = "checks"


@dataclass
class RunOutcome:
    """What a run left behind: exit code, directory and every report."""

    exit_code: int
    run_dir: Path
    reports: Dict[str, dict] = field(default_factory=dict)
    manifest: dict = field(default_factory=dict)
    error: Optional[dict] = None

    @property
    def status(self) -> str:
        return {
            EXIT_PASS: "passed",
            EXIT_CHECK_FAILED: "failed",
        }.get(self.exit_code, "aborted")


def jsonable(value):
    """Plain JSON types; numpy scalars unwrapped, non-finite floats become null."""
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def _write_json(path: Path, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(jsonable(payload), indent=2, sort_keys=True) + "\n")


def _format_float(value) -> str:
    return format(float(value), ".17g")


def write_diagnostics(path: Path, rows: Sequence[dict]) -> None:
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(DIAGNOSTIC_COLUMNS)
        for row in rows:
            writer.writerow([_format_float(row[column]) for column in DIAGNOSTIC_COLUMNS])


def read_diagnostics(path: Path) -> List[dict]:
    """
    Load a diagnostics CSV back into rows of floats.

    Raises:
        KineticException: 'incomplete_run' when the file is missing or holds no rows
    """
    path = Path(path)
    if not path.is_file():
        raise KineticException(f"Missing diagnostics file: {path}", error_code="incomplete_run")
    with open(path, newline="") as handle:
        rows = [{key: float(value) for key, value in row.items()} for row in csv.DictReader(handle)]
    if not rows:
        raise KineticException(f"Diagnostics file has no rows: {path}", error_code="incomplete_run")
    return rows


def git_describe() -> str:
    try:
        completed = subprocess.run(
            ["git", "describe", "--always", "--dirty", "--tags"],
            cwd=settings.BASE_DIR,
            capture_output=True,
            text=True,
            timeout=10,
            check=False,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return completed.stdout.strip() or "unknown"


def run_directory(scenario: Scenario, out_dir=None) -> Path:
    """<out_dir>/<name>-<hash prefix>; out_dir wins over the scenario directory, then settings."""
    base = out_dir or scenario.output.directory or settings.KINETIC_OUT_DIR
    return Path(base) / f"{scenario.scenario.name}-{config_hash(scenario)[:12]}"


def select_checks(scenario: Scenario, command: str) -> List[str]:
    """
    Checks a subcommand runs: run uses the list as given, cycles the cycle checks.
    verify keeps the listed static and sweep checks, or every static check when none are listed.
    """
    if command not in COMMANDS:
        raise KineticException(f"Unknown command: {command}", error_code="config_error")
    requested = list(scenario.verify.checks)
    if command == "cycles":
        return list(CYCLE_CHECKS)
    if command == "verify":
        kept = [name for name in requested if name in STATIC_CHECKS or name in SWEEP_CHECKS]
        return kept or list(STATIC_CHECKS)
    return requested


def build_manifest(scenario: Scenario, command: str, workers: int) -> dict:
    grid = scenario.velocity_grid()
    kernel = scenario.kernel()
    return {
        "name": scenario.scenario.name,
        "command": command,
        "config_hash": config_hash(scenario),
        "seed": scenario.scenario.seed,
        "threads": workers,
        "scenario": serialize_scenario(scenario),
        "grid": grid.describe(),
        "tol_grid": {**tol_grid(grid, kernel), **collision_defects(grid, kernel, workers)},
        "git_describe": git_describe(),
        "numpy_version": np.__version__,
    }


def _march(scenario: Scenario) -> MarchResult:
    physics = Physics(kernel=scenario.kernel(), weight=scenario.weight)
    field_ = initial_field(
        scenario.initial_data.recipe,
        scenario.spatial_grid(),
        scenario.velocity_grid(),
        scenario.weight,
        **scenario.initial_data.params(),
    )
    return march_global(
        field_,
        scenario.solver,
        physics,
        output_interval=scenario.output.interval,
        c_tilde=scenario.verify.c_tilde,
        C4=scenario.verify.C4,
    )


def _abort(run_dir: Path, manifest: dict, exc: KineticException, phase: str) -> RunOutcome:
    exit_code = EXIT_CONFIG_ERROR if phase == "setup" and exc.error_code in SETUP_ERROR_CODES else EXIT_RUNTIME_ABORT
    error = {"phase": phase, "error_code": exc.error_code, "message": exc.message, "context": exc.context}
    _write_json(run_dir / ABORT_FILE, error)
    manifest.update({"exit_code": exit_code, "error": {k: error[k] for k in ("phase", "error_code", "message")}})
    _write_json(run_dir / MANIFEST_FILE, manifest)
    logger.error(f"Run aborted during {phase}: {exc.message}", extra={"error_code": exc.error_code})
    return RunOutcome(exit_code=exit_code, run_dir=run_dir, manifest=manifest, error=error)


def run_scenario(scenario: Scenario, out_dir=None, command: str = "run", workers: Optional[int] = None) -> RunOutcome:
    """
    Execute a validated scenario and write its artifacts.

    Args:
        scenario: Parsed and validated scenario
        out_dir: Base output directory; defaults to settings.KINETIC_OUT_DIR
        command: 'run' (march when enabled, then the listed checks), 'verify' or 'cycles'
        workers: Thread count for checks; defaults to the solver's threads

    Returns:
        RunOutcome whose exit_code is 0 iff every check passed
    """
    workers = workers or scenario.solver.threads
    run_dir = run_directory(scenario, out_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    names = select_checks(scenario, command)

    try:
        manifest = build_manifest(scenario, command, workers)
    except KineticException as e:
        return _abort(run_dir, {"name": scenario.scenario.name, "command": command}, e, "setup")

    logger.info(
        f"Starting {command} for scenario {scenario.scenario.name}",
        extra={"run_dir": str(run_dir), "checks": names, "seed": scenario.scenario.seed},
    )

    rows = None
    if command == "run" and scenario.scenario.march:
        try:
            result = _march(scenario)
        except KineticException as e:
            phase = "march" if "time" in e.context else "setup"
            return _abort(run_dir, manifest, e, phase)
        rows = result.rows
        write_diagnostics(run_dir / DIAGNOSTICS_FILE, rows)
        manifest["march"] = result.summary()

    reports = run_checks(names, CheckContext(scenario=scenario, rows=rows, workers=workers))
    for name, report in reports.items():
        _write_json(run_dir / CHECKS_DIR / f"{name}.json", report)

    exit_code = EXIT_PASS if all(report["passed"] for report in reports.values()) else EXIT_CHECK_FAILED
    manifest["checks"] = {name: bool(report["passed"]) for name, report in reports.items()}
    manifest["exit_code"] = exit_code
    _write_json(run_dir / MANIFEST_FILE, manifest)
    logger.info(
        f"Finished {command} for scenario {scenario.scenario.name} with exit code {exit_code}",
        extra={"run_dir": str(run_dir)},
    )
    return RunOutcome(exit_code=exit_code, run_dir=run_dir, reports=reports, manifest=manifest)


def emit_plot_data(run_dir) -> Path:
    """
    Write plot_data.csv: long-form (t, series, value) rows of the norm traces,
    plus a winf_envelope series when the run carries a decay fit.

    Raises:
        KineticException: 'incomplete_run' when the run has no diagnostics; nothing is written
    """
    run_dir = Path(run_dir)
    rows = read_diagnostics(run_dir / DIAGNOSTICS_FILE)

    series = [(name, [(row["t"], row[name]) for row in rows]) for name in PLOT_SERIES]
    decay_path = run_dir / CHECKS_DIR / "decay_rate.json"
    if decay_path.is_file():
        decay = json.loads(decay_path.read_text())
        if decay.get("fitted_rate") is not None and decay.get("intercept") is not None:
            times = np.array([row["t"] for row in rows])
            envelope = np.exp(decay["intercept"] - decay["fitted_rate"] * times)
            series.append(("winf_envelope", list(zip(times.tolist(), envelope.tolist()))))

    target = run_dir / PLOT_FILE
    handle = tempfile.NamedTemporaryFile("w", dir=run_dir, suffix=".tmp", delete=False, newline="")
    try:
        with handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["t", "series", "value"])
            for name, points in series:
                for t, value in points:
                    writer.writerow([_format_float(t), name, _format_float(value)])
        os.replace(handle.name, target)
    except OSError:
        Path(handle.name).unlink(missing_ok=True)
        raise
    logger.info(f"Plot data written to {target}", extra={"series": [name for name, _ in series]})
    return target


class SimulationRunService:
    """
    Records runs and their check reports in the database.
    """

    @staticmethod
    def start(scenario: Scenario, command: str = "run") -> SimulationRun:
        return SimulationRun.objects.create(
            name=scenario.scenario.name,
            scenario_text=serialize_scenario(scenario),
            config_hash=config_hash(scenario),
            seed=scenario.scenario.seed,
            command=command,
            status="running",
        )

    @staticmethod
    @transaction.atomic
    def finish(run: SimulationRun, outcome: RunOutcome) -> SimulationRun:
        run.status = outcome.status
        run.exit_code = outcome.exit_code
        run.output_dir = str(outcome.run_dir)
        run.manifest = jsonable(outcome.manifest)
        run.finished_at = timezone.now()
        run.save()
        for name, report in outcome.reports.items():
            CheckReport.objects.create(
                run=run,
                check_name=name,
                passed=bool(report["passed"]),
                seed=report.get("seed", run.seed),
                report=jsonable(report),
                error_code=report.get("error_code", ""),
            )
        return run

    @staticmethod
    def execute(scenario: Scenario, out_dir=None, command: str = "run", workers: Optional[int] = None):
        """Run the scenario and keep a SimulationRun row in step with it."""
        run = SimulationRunService.start(scenario, command)
        try:
            outcome = run_scenario(scenario, out_dir=out_dir, command=command, workers=workers)
        except Exception:
            run.status = "aborted"
            run.exit_code = EXIT_RUNTIME_ABORT
            run.finished_at = timezone.now()
            run.save()
            raise
        return SimulationRunService.finish(run, outcome), outcome
