"""
kinetic: run scenarios, checks and cycle statistics from the command line.

    manage.py kinetic run --config scenarios/fixtures/equilibrium.ini
    manage.py kinetic verify --config ... --threads 4
    manage.py kinetic cycles --config ... --seed 7
    manage.py kinetic plot-data <run_dir>

Exit codes: 0 pass, 1 check failed, 2 config error, 3 runtime abort.
"""

import json
import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from core.exceptions import KineticException
from scenarios.loader import parse_scenario, serialize_scenario, with_overrides
from scenarios.services import (
    EXIT_CONFIG_ERROR,
    EXIT_PASS,
    EXIT_RUNTIME_ABORT,
    SimulationRunService,
    emit_plot_data,
)
from scenarios.tasks import run_scenario_task

logger = logging.getLogger(__name__)


class Command(BaseCommand):
    help = "Run kinetic scenarios and verification checks"

    def add_arguments(self, parser):
        subparsers = parser.add_subparsers(dest="subcommand", required=True)
        for name, text in (
            ("run", "March the scenario (when enabled) and run its checks"),
            ("verify", "Run the scenario's static checks without marching"),
            ("cycles", "Tabulate cycle escape probabilities and fit cycle constants"),
        ):
            sub = subparsers.add_parser(name, help=text)
            sub.add_argument("--config", required=True, help="Scenario INI file")
            sub.add_argument("--seed", type=int, default=None, help="Override [scenario] seed")
            sub.add_argument("--threads", type=int, default=None, help="Override [solver] threads")
            sub.add_argument("--out-dir", default=None, help="Base output directory (default: KINETIC_OUT_DIR)")
            sub.add_argument("--background", action="store_true", help="Dispatch through Celery")
        plot = subparsers.add_parser("plot-data", help="Write long-form plot data for a finished run")
        plot.add_argument("run_dir", help="Run directory holding diagnostics.csv")

    def handle(self, *args, **options):
        subcommand = options["subcommand"]
        if subcommand == "plot-data":
            return self._plot_data(options["run_dir"])
        return self._execute(subcommand, options)

    def _plot_data(self, run_dir):
        try:
            path = emit_plot_data(run_dir)
        except KineticException as e:
            raise CommandError(f"{e.error_code}: {e.message}", returncode=EXIT_RUNTIME_ABORT)
        self.stdout.write(str(path))

    def _execute(self, command, options):
        try:
            scenario = parse_scenario(options["config"])
        except KineticException as e:
            for violation in e.context.get("violations", [e.message]):
                self.stderr.write(violation)
            raise CommandError("Scenario rejected", returncode=EXIT_CONFIG_ERROR)
        except OSError as e:
            raise CommandError(f"Cannot read scenario: {e}", returncode=EXIT_CONFIG_ERROR)

        threads = options["threads"]
        if threads is None and settings.KINETIC_THREADS > 1:
            threads = settings.KINETIC_THREADS
        scenario = with_overrides(scenario, seed=options["seed"], threads=threads)

        if options["background"]:
            result = run_scenario_task.delay(serialize_scenario(scenario), options["out_dir"], command)
            self.stdout.write(f"Dispatched task {result.id}")
            return

        try:
            run, outcome = SimulationRunService.execute(scenario, out_dir=options["out_dir"], command=command)
        except KineticException as e:
            logger.error(f"Unhandled solver failure: {e.message}", exc_info=True)
            raise CommandError(f"{e.error_code}: {e.message}", returncode=EXIT_RUNTIME_ABORT)

        self.stdout.write(json.dumps({
            "run_id": str(run.id),
            "status": run.status,
            "exit_code": outcome.exit_code,
            "run_dir": str(outcome.run_dir),
            "checks": {name: bool(report["passed"]) for name, report in outcome.reports.items()},
        }, indent=2))
        if outcome.exit_code != EXIT_PASS:
            raise CommandError(f"Run finished with exit code {outcome.exit_code}", returncode=outcome.exit_code)
