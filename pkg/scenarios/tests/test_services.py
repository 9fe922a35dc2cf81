"""
Tests for scenario execution and run artifacts.

Tests cover:
- Exit codes for pass, failed check, config error and runtime abort
- Diagnostics, manifest and per-check report files
- Check selection per subcommand
- Plot data emission
- Recording runs through SimulationRunService
"""

import csv
import json
import math
from unittest.mock import patch

import numpy as np
import pytest
from django.conf import settings

from core.exceptions import KineticException
from scenarios.loader import parse_scenario, serialize_scenario, with_overrides
from scenarios.models import SimulationRun
from scenarios.services import (
    EXIT_CHECK_FAILED,
    EXIT_CONFIG_ERROR,
    EXIT_PASS,
    EXIT_RUNTIME_ABORT,
    SimulationRunService,
    emit_plot_data,
    jsonable,
    read_diagnostics,
    run_directory,
    run_scenario,
    select_checks,
    write_diagnostics,
)
from scenarios.tests.factories import DESK_SCENARIO
from solver.services import DIAGNOSTIC_COLUMNS
from verify.models import CheckReport
from verify.runners import CYCLE_CHECKS, STATIC_CHECKS


def _desk(*replacements):
    text = DESK_SCENARIO
    for old, new in replacements:
        text = text.replace(old, new)
    return parse_scenario(text)


def _read_csv(path):
    with open(path, newline="") as handle:
        return list(csv.DictReader(handle))


class TestRunScenario:
    """Tests for run_scenario"""

    def test_desk_run_passes(self, tmp_path):
        """The equilibrium desk run marches, checks and exits 0"""
        outcome = run_scenario(_desk(), out_dir=tmp_path)

        assert outcome.exit_code == EXIT_PASS
        assert outcome.status == "passed"
        rows = _read_csv(outcome.run_dir / "diagnostics.csv")
        assert list(rows[0]) == list(DIAGNOSTIC_COLUMNS)
        assert float(rows[0]["t"]) == 0.0
        assert float(rows[-1]["t"]) == pytest.approx(0.02)
        assert (outcome.run_dir / "checks" / "l2_growth.json").is_file()
        assert (outcome.run_dir / "checks" / "R_lower_bound.json").is_file()

    def test_manifest(self, tmp_path):
        """The manifest reproduces the run"""
        scenario = _desk()

        outcome = run_scenario(scenario, out_dir=tmp_path)

        manifest = json.loads((outcome.run_dir / "manifest.json").read_text())
        assert manifest["scenario"] == serialize_scenario(scenario)
        assert manifest["seed"] == 3
        assert manifest["exit_code"] == 0
        assert manifest["checks"] == {"l2_growth": True, "R_lower_bound": True}
        assert manifest["grid"]["size"] == 125
        assert manifest["tol_grid"]["mass_defect_raw"] >= 0.0
        assert manifest["tol_grid"]["mass_defect_corrected"] >= 0.0
        assert manifest["march"]["steps"] >= 1
        assert "numpy_version" in manifest
        assert parse_scenario(manifest["scenario"]) == scenario

    def test_run_directory_named_by_hash(self, tmp_path):
        """Runs land in <out>/<name>-<hash prefix>"""
        outcome = run_scenario(_desk(), out_dir=tmp_path)

        assert outcome.run_dir.parent == tmp_path
        assert outcome.run_dir.name.startswith("desk-")
        assert outcome.run_dir.name == run_directory(_desk(), tmp_path).name

    def test_deterministic_across_threads(self, tmp_path):
        """Identical seeds give identical diagnostics for any thread count"""
        scenario = _desk(("recipe = equilibrium", "recipe = small_perturbation"))

        serial = run_scenario(scenario, out_dir=tmp_path / "a")
        threaded = run_scenario(with_overrides(scenario, threads=2), out_dir=tmp_path / "b")

        first = (serial.run_dir / "diagnostics.csv").read_text()
        second = (threaded.run_dir / "diagnostics.csv").read_text()
        assert first == second

    def test_failed_check_exit_code(self, tmp_path):
        """A check that cannot pass gives exit 1 and still writes its report"""
        scenario = _desk(("checks = l2_growth, R_lower_bound", "checks = l2_growth, decay_rate"))

        outcome = run_scenario(scenario, out_dir=tmp_path)

        assert outcome.exit_code == EXIT_CHECK_FAILED
        assert outcome.status == "failed"
        report = json.loads((outcome.run_dir / "checks" / "decay_rate.json").read_text())
        assert report["passed"] is False
        assert report["error_code"] == "fit_undefined"

    def test_setup_error_exit_code(self, tmp_path):
        """Initial data above M0_cap is a config error"""
        scenario = _desk(
            ("recipe = equilibrium", "recipe = large_amplitude\namplitude = 0.9"),
            ("n_cells = 4", "n_cells = 4\nM0_cap = 1.0"),
        )

        outcome = run_scenario(scenario, out_dir=tmp_path)

        assert outcome.exit_code == EXIT_CONFIG_ERROR
        assert outcome.status == "aborted"
        dump = json.loads((outcome.run_dir / "abort_dump.json").read_text())
        assert dump["phase"] == "setup"
        assert dump["error_code"] == "invalid_input"
        assert not (outcome.run_dir / "diagnostics.csv").exists()

    def test_runtime_abort_exit_code(self, tmp_path):
        """A march that cannot converge aborts with exit 3 and a dump"""
        scenario = _desk(
            ("recipe = equilibrium", "recipe = small_perturbation"),
            ("n_cells = 4", "n_cells = 4\npicard_tol = 1e-300\npicard_max_iters = 1\nmax_halvings = 0"),
        )

        outcome = run_scenario(scenario, out_dir=tmp_path)

        assert outcome.exit_code == EXIT_RUNTIME_ABORT
        dump = json.loads((outcome.run_dir / "abort_dump.json").read_text())
        assert dump["phase"] == "march"
        assert dump["error_code"] == "step_rejected"
        assert dump["context"]["time"] == 0.0
        manifest = json.loads((outcome.run_dir / "manifest.json").read_text())
        assert manifest["exit_code"] == EXIT_RUNTIME_ABORT

    def test_verify_without_march(self, tmp_path):
        """verify runs static checks and writes no diagnostics"""
        scenario = _desk(("name = desk", "name = desk\nmarch = false"))

        outcome = run_scenario(scenario, out_dir=tmp_path, command="verify")

        assert outcome.exit_code in (EXIT_PASS, EXIT_CHECK_FAILED)
        assert list(outcome.reports) == list(STATIC_CHECKS)
        assert not (outcome.run_dir / "diagnostics.csv").exists()
        assert all((outcome.run_dir / "checks" / f"{name}.json").is_file() for name in STATIC_CHECKS)


class TestSelectChecks:
    """Tests for select_checks"""

    def test_run_uses_listed_checks(self):
        """run keeps the scenario's list and order"""
        assert select_checks(_desk(), "run") == ["l2_growth", "R_lower_bound"]

    def test_verify_keeps_static_subset(self):
        """verify drops trace checks from the list"""
        scenario = _desk(("checks = l2_growth, R_lower_bound", "checks = l2_growth, gain_bound"))

        assert select_checks(scenario, "verify") == ["gain_bound"]

    def test_verify_keeps_sweep_checks(self):
        """verify runs listed sweep checks since they march their own data"""
        scenario = _desk(("checks = l2_growth, R_lower_bound", "checks = smallness_boundary, l2_growth, kernel_bounds"))

        assert select_checks(scenario, "verify") == ["smallness_boundary", "kernel_bounds"]

    def test_verify_defaults_to_all_static(self):
        """verify with no static checks listed runs them all"""
        assert select_checks(_desk(), "verify") == list(STATIC_CHECKS)

    def test_cycles(self):
        """cycles runs the cycle checks"""
        assert select_checks(_desk(), "cycles") == list(CYCLE_CHECKS)

    def test_unknown_command(self):
        """Unknown subcommands are a config error"""
        with pytest.raises(KineticException) as exc_info:
            select_checks(_desk(), "plot")

        assert exc_info.value.error_code == "config_error"


class TestRunDirectory:
    """Tests for run_directory"""

    @patch.object(settings, "KINETIC_OUT_DIR", "/srv/kinetic-runs")
    def test_settings_default(self):
        """Without overrides runs go under KINETIC_OUT_DIR"""
        assert str(run_directory(_desk())).startswith("/srv/kinetic-runs/desk-")

    def test_scenario_directory(self, tmp_path):
        """[output] directory is used when no out_dir is passed"""
        scenario = with_overrides(_desk(), directory=str(tmp_path / "from-scenario"))

        assert run_directory(scenario).parent == tmp_path / "from-scenario"
        assert run_directory(scenario, tmp_path).parent == tmp_path


class TestDiagnosticsFiles:
    """Tests for the diagnostics CSV helpers and jsonable"""

    def test_write_then_read(self, tmp_path):
        """Values survive the CSV at full precision"""
        row = {column: 1.0 / 3.0 for column in DIAGNOSTIC_COLUMNS}
        path = tmp_path / "diagnostics.csv"

        write_diagnostics(path, [row])

        assert read_diagnostics(path) == [row]

    def test_missing_file(self, tmp_path):
        """A missing diagnostics file is an incomplete run"""
        with pytest.raises(KineticException) as exc_info:
            read_diagnostics(tmp_path / "diagnostics.csv")

        assert exc_info.value.error_code == "incomplete_run"

    def test_header_only_file(self, tmp_path):
        """A file without rows is an incomplete run"""
        path = tmp_path / "diagnostics.csv"
        write_diagnostics(path, [])

        with pytest.raises(KineticException) as exc_info:
            read_diagnostics(path)

        assert exc_info.value.error_code == "incomplete_run"

    def test_jsonable(self):
        """numpy values are unwrapped and non-finite floats dropped to null"""
        value = {"a": np.float64(0.5), "b": np.int64(3), "c": np.array([1.0, math.nan]), "d": (np.bool_(True), math.inf)}

        assert jsonable(value) == {"a": 0.5, "b": 3, "c": [1.0, None], "d": [True, None]}


class TestEmitPlotData:
    """Tests for emit_plot_data"""

    def test_series_per_time(self, tmp_path):
        """Three series with one row per diagnostics time"""
        outcome = run_scenario(_desk(), out_dir=tmp_path)
        n_times = len(read_diagnostics(outcome.run_dir / "diagnostics.csv"))

        path = emit_plot_data(outcome.run_dir)

        rows = _read_csv(path)
        assert len(rows) == 3 * n_times
        assert {row["series"] for row in rows} == {"l2", "winf", "gauss_l1v_sup"}
        assert not list(outcome.run_dir.glob("*.tmp"))

    def test_decay_envelope_series(self, tmp_path):
        """A stored decay fit adds the fitted envelope"""
        rows = [{column: 0.0 for column in DIAGNOSTIC_COLUMNS} for _ in range(3)]
        for i, row in enumerate(rows):
            row["t"] = 0.1 * i
            row["winf"] = 3.0 * math.exp(-0.7 * row["t"])
        write_diagnostics(tmp_path / "diagnostics.csv", rows)
        (tmp_path / "checks").mkdir()
        (tmp_path / "checks" / "decay_rate.json").write_text(
            json.dumps({"fitted_rate": 0.7, "intercept": math.log(3.0)})
        )

        plot = _read_csv(emit_plot_data(tmp_path))

        envelope = [float(row["value"]) for row in plot if row["series"] == "winf_envelope"]
        assert envelope == pytest.approx([3.0 * math.exp(-0.7 * 0.1 * i) for i in range(3)])
        assert len(plot) == 12

    def test_empty_run_dir(self, tmp_path):
        """No diagnostics means no plot file"""
        with pytest.raises(KineticException) as exc_info:
            emit_plot_data(tmp_path)

        assert exc_info.value.error_code == "incomplete_run"
        assert not (tmp_path / "plot_data.csv").exists()
        assert not list(tmp_path.iterdir())


@pytest.mark.django_db
class TestSimulationRunService:
    """Tests for SimulationRunService"""

    def test_execute_records_run_and_reports(self, tmp_path):
        """A finished run stores its status, manifest and check reports"""
        run, outcome = SimulationRunService.execute(_desk(), out_dir=tmp_path)

        run.refresh_from_db()
        assert run.status == "passed"
        assert run.exit_code == 0
        assert run.output_dir == str(outcome.run_dir)
        assert run.finished_at is not None
        assert run.manifest["exit_code"] == 0
        assert set(run.check_reports.values_list("check_name", flat=True)) == {"l2_growth", "R_lower_bound"}

    def test_failed_run_status(self, tmp_path):
        """Exit 1 is stored as a failed run"""
        scenario = _desk(("checks = l2_growth, R_lower_bound", "checks = decay_rate"))

        run, _ = SimulationRunService.execute(scenario, out_dir=tmp_path)

        assert run.status == "failed"
        assert CheckReport.objects.get(run=run).error_code == "fit_undefined"

    @patch("scenarios.services.run_scenario", side_effect=RuntimeError("disk full"))
    def test_unexpected_error_marks_run_aborted(self, mock_run, tmp_path):
        """An unexpected failure leaves the run marked aborted"""
        with pytest.raises(RuntimeError):
            SimulationRunService.execute(_desk(), out_dir=tmp_path)

        run = SimulationRun.objects.get()
        assert run.status == "aborted"
        assert run.exit_code == EXIT_RUNTIME_ABORT
        mock_run.assert_called_once()
