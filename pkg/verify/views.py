from rest_framework import viewsets, filters
from rest_framework.permissions import IsAuthenticated
from django_filters.rest_framework import DjangoFilterBackend

from .models import CheckReport
from .serializers import CheckReportSerializer


class CheckReportViewSet(viewsets.ReadOnlyModelViewSet):
    """
    Lists verification reports.
    Supports filtering by run, check name and outcome.
    """
    serializer_class = CheckReportSerializer
    queryset = CheckReport.objects.select_related("run")
    permission_classes = [IsAuthenticated]
    filter_backends = [DjangoFilterBackend, filters.OrderingFilter]
    filterset_fields = ["run", "check_name", "passed", "error_code"]
    ordering_fields = ["created_at"]
    ordering = ["-created_at"]
