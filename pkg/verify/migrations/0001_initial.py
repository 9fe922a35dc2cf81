import uuid

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
        ("scenarios", "0001_initial"),
    ]

    operations = [
        migrations.CreateModel(
            name="CheckReport",
            fields=[
                ("id", models.UUIDField(default=uuid.uuid4, editable=False, primary_key=True, serialize=False)),
                ("check_name", models.CharField(db_index=True, max_length=50)),
                ("passed", models.BooleanField(db_index=True, default=False)),
                ("seed", models.BigIntegerField(default=0)),
                ("report", models.JSONField(blank=True, default=dict)),
                ("error_code", models.CharField(blank=True, max_length=50)),
                ("created_at", models.DateTimeField(auto_now_add=True)),
                (
                    "run",
                    models.ForeignKey(
                        blank=True,
                        null=True,
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name="check_reports",
                        to="scenarios.simulationrun",
                    ),
                ),
            ],
            options={
                "db_table": "check_reports",
                "ordering": ["-created_at"],
            },
        ),
    ]
