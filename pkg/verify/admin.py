from django.contrib import admin

from .models import CheckReport


@admin.register(CheckReport)
class CheckReportAdmin(admin.ModelAdmin):
    """
    Read-only admin view for verification reports.
    """
    list_display = (
        "check_name",
        "passed",
        "run",
        "seed",
        "error_code",
        "created_at",
    )
    list_filter = (
        "check_name",
        "passed",
        "created_at",
    )
    search_fields = (
        "check_name",
        "run__name",
    )
    ordering = ("-created_at",)
    readonly_fields = (
        "run",
        "check_name",
        "passed",
        "seed",
        "report",
        "error_code",
        "created_at",
    )

    def has_add_permission(self, request):
        return False

    def has_change_permission(self, request, obj=None):
        return False

    def has_delete_permission(self, request, obj=None):
        return False
