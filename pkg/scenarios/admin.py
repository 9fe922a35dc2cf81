from django.contrib import admin

from .models import SimulationRun


@admin.register(SimulationRun)
class SimulationRunAdmin(admin.ModelAdmin):
    """
    Read-only admin view for scenario runs.
    Runs are written by the cli and background tasks only.
    """
    list_display = (
        "name",
        "command",
        "status",
        "exit_code",
        "seed",
        "config_hash",
        "started_at",
        "finished_at",
    )
    list_filter = (
        "status",
        "command",
        "started_at",
    )
    search_fields = (
        "name",
        "config_hash",
    )
    ordering = ("-started_at",)
    readonly_fields = (
        "name",
        "scenario_text",
        "config_hash",
        "seed",
        "command",
        "status",
        "exit_code",
        "output_dir",
        "manifest",
        "started_at",
        "finished_at",
    )

    def has_add_permission(self, request):
        return False

    def has_change_permission(self, request, obj=None):
        return False

    def has_delete_permission(self, request, obj=None):
        return False
