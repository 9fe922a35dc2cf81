import uuid

from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name="SimulationRun",
            fields=[
                ("id", models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ("name", models.CharField(help_text="Scenario name from the [scenario] section", max_length=200)),
                ("scenario_text", models.TextField(help_text="Canonical scenario INI with all defaults filled")),
                ("config_hash", models.CharField(db_index=True, help_text="sha256 of the canonical scenario text", max_length=64)),
                ("seed", models.BigIntegerField(default=0)),
                ("command", models.CharField(default="run", help_text="cli subcommand that produced the run", max_length=20)),
                (
                    "status",
                    models.CharField(
                        choices=[
                            ("pending", "Pending"),
                            ("running", "Running"),
                            ("passed", "Passed"),
                            ("failed", "Check failed"),
                            ("aborted", "Aborted"),
                        ],
                        db_index=True,
                        default="pending",
                        max_length=20,
                    ),
                ),
                ("exit_code", models.IntegerField(blank=True, null=True)),
                ("output_dir", models.CharField(blank=True, max_length=500)),
                ("manifest", models.JSONField(blank=True, default=dict)),
                ("started_at", models.DateTimeField(auto_now_add=True)),
                ("finished_at", models.DateTimeField(blank=True, null=True)),
            ],
            options={
                "db_table": "simulation_runs",
                "ordering": ["-started_at"],
                "indexes": [models.Index(fields=["name", "status"], name="simulation__name_8a1f3c_idx")],
            },
        ),
    ]
