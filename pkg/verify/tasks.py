"""
Celery tasks for the verify app.

Each task runs a single check so independent checks of one scenario can
execute concurrently; every check derives its own rng stream from the seed.
"""
from celery import shared_task
import logging

from scenarios.loader import parse_scenario
from scenarios.models import SimulationRun
from scenarios.services import jsonable, read_diagnostics
from .models import CheckReport
from .runners import CheckContext, run_check

logger = logging.getLogger(__name__)


@shared_task(bind=True)
def run_check_task(self, scenario_text, check_name, run_id=None, diagnostics_path=None, workers=1):
    """
    Run one check of a scenario and store its report.

    Args:
        scenario_text: Scenario INI text
        check_name: Name from the check registry
        run_id: Optional SimulationRun the report belongs to
        diagnostics_path: diagnostics.csv of a finished march, needed by trace checks

    Returns:
        dict: Report id, check name and pass flag
    """
    scenario = parse_scenario(scenario_text)
    rows = read_diagnostics(diagnostics_path) if diagnostics_path else None
    report = run_check(check_name, CheckContext(scenario=scenario, rows=rows, workers=workers))

    run = SimulationRun.objects.filter(id=run_id).first() if run_id else None
    stored = CheckReport.objects.create(
        run=run,
        check_name=check_name,
        passed=bool(report["passed"]),
        seed=report.get("seed", scenario.scenario.seed),
        report=jsonable(report),
        error_code=report.get("error_code", ""),
    )
    logger.info(f"Check task {check_name} stored as {stored.id}", extra={"passed": stored.passed})
    return {"report_id": str(stored.id), "check": check_name, "passed": stored.passed}
