"""
Tests for the kinetic management command.

Tests cover:
- run, verify and plot-data subcommands
- Exit codes surfaced through CommandError.returncode
- Seed overrides and background dispatch
"""

import json
from io import StringIO

import pytest
from django.core.management import call_command
from django.core.management.base import CommandError

from scenarios.models import SimulationRun
from scenarios.tests.factories import DESK_SCENARIO


@pytest.fixture
def desk_ini(tmp_path):
    path = tmp_path / "desk.ini"
    path.write_text(DESK_SCENARIO)
    return path


def _call(*args):
    stdout, stderr = StringIO(), StringIO()
    call_command("kinetic", *[str(arg) for arg in args], stdout=stdout, stderr=stderr)
    return stdout.getvalue()


@pytest.mark.django_db
class TestKineticCommand:
    """Tests for manage.py kinetic"""

    def test_run_prints_summary(self, desk_ini, tmp_path):
        """A passing run prints its summary as JSON"""
        output = _call("run", "--config", desk_ini, "--out-dir", tmp_path / "runs")

        summary = json.loads(output)
        assert summary["exit_code"] == 0
        assert summary["status"] == "passed"
        assert summary["checks"] == {"l2_growth": True, "R_lower_bound": True}
        assert SimulationRun.objects.get().status == "passed"

    def test_seed_override(self, desk_ini, tmp_path):
        """--seed replaces the scenario seed"""
        _call("run", "--config", desk_ini, "--out-dir", tmp_path / "runs", "--seed", 11)

        assert SimulationRun.objects.get().seed == 11

    def test_failed_check_returncode(self, tmp_path):
        """A failing check raises CommandError with returncode 1"""
        path = tmp_path / "decay.ini"
        path.write_text(DESK_SCENARIO.replace("checks = l2_growth, R_lower_bound", "checks = decay_rate"))

        with pytest.raises(CommandError) as exc_info:
            _call("run", "--config", path, "--out-dir", tmp_path / "runs")

        assert exc_info.value.returncode == 1
        assert SimulationRun.objects.get().status == "failed"

    def test_config_error_returncode(self, tmp_path):
        """Violations are written to stderr and give returncode 2"""
        path = tmp_path / "bad.ini"
        path.write_text(DESK_SCENARIO.replace("n_cells = 4", "n_cells = 1"))
        stderr = StringIO()

        with pytest.raises(CommandError) as exc_info:
            call_command("kinetic", "run", "--config", str(path), stdout=StringIO(), stderr=stderr)

        assert exc_info.value.returncode == 2
        assert "solver.n_cells" in stderr.getvalue()
        assert not SimulationRun.objects.exists()

    def test_missing_config_file(self, tmp_path):
        """An unreadable scenario file is a config error"""
        with pytest.raises(CommandError) as exc_info:
            _call("run", "--config", tmp_path / "absent.ini")

        assert exc_info.value.returncode == 2

    def test_plot_data(self, desk_ini, tmp_path):
        """plot-data prints the written file"""
        summary = json.loads(_call("run", "--config", desk_ini, "--out-dir", tmp_path / "runs"))

        output = _call("plot-data", summary["run_dir"])

        assert output.strip().endswith("plot_data.csv")

    def test_plot_data_without_diagnostics(self, tmp_path):
        """plot-data on an empty directory fails with returncode 3"""
        with pytest.raises(CommandError) as exc_info:
            _call("plot-data", tmp_path)

        assert exc_info.value.returncode == 3
        assert "incomplete_run" in str(exc_info.value)

    def test_background_dispatch(self, desk_ini, tmp_path):
        """--background goes through the Celery task"""
        output = _call("run", "--config", desk_ini, "--out-dir", tmp_path / "runs", "--background")

        assert output.startswith("Dispatched task")
        assert SimulationRun.objects.get().status == "passed"
