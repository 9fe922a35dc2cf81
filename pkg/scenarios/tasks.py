"""
Celery tasks for the scenarios app.

Runs are dispatched here by `kinetic run --background`. With
CELERY_TASK_ALWAYS_EAGER on (the desk default) they execute inline.
"""
from celery import shared_task
import logging

from core.exceptions import KineticException
from .loader import parse_scenario
from .services import EXIT_CONFIG_ERROR, SimulationRunService

logger = logging.getLogger(__name__)


@shared_task(bind=True)
def run_scenario_task(self, scenario_text, out_dir=None, command="run", workers=None):
    """
    Parse and execute a scenario in the background.

    Returns:
        dict: Run id, exit code, status and output directory
    """
    try:
        scenario = parse_scenario(scenario_text)
    except KineticException as e:
        logger.error(f"Background run rejected: {e.message}", extra={"error_code": e.error_code})
        return {"status": "config_error", "exit_code": EXIT_CONFIG_ERROR, "violations": e.context.get("violations", [])}

    run, outcome = SimulationRunService.execute(scenario, out_dir=out_dir, command=command, workers=workers)
    result = {
        "run_id": str(run.id),
        "status": run.status,
        "exit_code": outcome.exit_code,
        "output_dir": str(outcome.run_dir),
    }
    logger.info(f"Background run finished: {result}")
    return result
