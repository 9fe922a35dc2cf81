import uuid

from django.db import models

from scenarios.models import SimulationRun


class CheckReport(models.Model):
    """
    Machine-readable outcome of one verification check.
    Mirrors the JSON report written next to the run's diagnostics.
    """

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    run = models.ForeignKey(
        SimulationRun,
        on_delete=models.CASCADE,
        related_name="check_reports",
        null=True,
        blank=True,
    )
    check_name = models.CharField(max_length=50, db_index=True)
    passed = models.BooleanField(default=False, db_index=True)
    seed = models.BigIntegerField(default=0)
    report = models.JSONField(default=dict, blank=True)
    error_code = models.CharField(max_length=50, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        db_table = "check_reports"
        ordering = ["-created_at"]

    def __str__(self):
        return f"{self.check_name}: {'pass' if self.passed else 'fail'}"
