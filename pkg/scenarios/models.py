import uuid

from django.db import models


class SimulationRun(models.Model):
    """
    One execution of a scenario through the cli or a background task.
    Stores the canonical scenario text so any run can be reproduced.
    """

    STATUS_CHOICES = [
        ("pending", "Pending"),
        ("running", "Running"),
        ("passed", "Passed"),
        ("failed", "Check failed"),
        ("aborted", "Aborted"),
    ]

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    name = models.CharField(max_length=200, help_text="Scenario name from the [scenario] section")
    scenario_text = models.TextField(help_text="Canonical scenario INI with all defaults filled")
    config_hash = models.CharField(max_length=64, db_index=True, help_text="sha256 of the canonical scenario text")
    seed = models.BigIntegerField(default=0)
    command = models.CharField(max_length=20, default="run", help_text="cli subcommand that produced the run")
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default="pending", db_index=True)
    exit_code = models.IntegerField(null=True, blank=True)
    output_dir = models.CharField(max_length=500, blank=True)
    manifest = models.JSONField(default=dict, blank=True)
    started_at = models.DateTimeField(auto_now_add=True)
    finished_at = models.DateTimeField(null=True, blank=True)

    class Meta:
        db_table = "simulation_runs"
        ordering = ["-started_at"]
        indexes = [
            models.Index(fields=["name", "status"]),
        ]

    def __str__(self):
        return f"{self.name} ({self.status})"

    @property
    def is_finished(self) -> bool:
        return self.status in ("passed", "failed", "aborted")
