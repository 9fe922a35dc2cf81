"""
Tests for scenarios Celery tasks.

Tests cover:
- Background execution of a valid scenario
- Config errors returned instead of raised
"""

import pytest

from scenarios.models import SimulationRun
from scenarios.tasks import run_scenario_task
from scenarios.tests.factories import DESK_SCENARIO


@pytest.mark.django_db
class TestRunScenarioTask:
    """Tests for run_scenario_task"""

    def test_runs_scenario(self, tmp_path):
        """The task records the run and reports its outcome"""
        result = run_scenario_task(DESK_SCENARIO, str(tmp_path))

        run = SimulationRun.objects.get()
        assert result["run_id"] == str(run.id)
        assert result["exit_code"] == 0
        assert result["status"] == "passed"
        assert result["output_dir"].startswith(str(tmp_path))

    def test_config_error(self, tmp_path):
        """An invalid scenario returns exit code 2 and its violations"""
        result = run_scenario_task(DESK_SCENARIO.replace("seed = 3", "seed = -1"), str(tmp_path))

        assert result["exit_code"] == 2
        assert result["status"] == "config_error"
        assert any(v.startswith("scenario.seed") for v in result["violations"])
        assert not SimulationRun.objects.exists()
