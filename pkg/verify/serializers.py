from rest_framework import serializers

from .models import CheckReport


class CheckReportSerializer(serializers.ModelSerializer):
    """
    Serializer for stored check reports.
    """
    run_name = serializers.CharField(source="run.name", read_only=True, default=None)

    class Meta:
        model = CheckReport
        fields = [
            "id",
            "run",
            "run_name",
            "check_name",
            "passed",
            "seed",
            "error_code",
            "report",
            "created_at",
        ]
        read_only_fields = fields
