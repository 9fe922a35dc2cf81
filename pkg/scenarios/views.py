from rest_framework import viewsets, filters
from rest_framework.permissions import IsAuthenticated
from django_filters.rest_framework import DjangoFilterBackend

from .models import SimulationRun
from .serializers import SimulationRunSerializer


class SimulationRunViewSet(viewsets.ReadOnlyModelViewSet):
    """
    Lists stored scenario runs.
    Supports filtering by status, name, command and config hash.
    """
    serializer_class = SimulationRunSerializer
    queryset = SimulationRun.objects.all()
    permission_classes = [IsAuthenticated]
    filter_backends = [DjangoFilterBackend, filters.OrderingFilter]
    filterset_fields = ["status", "name", "command", "config_hash", "seed"]
    ordering_fields = ["started_at", "finished_at"]
    ordering = ["-started_at"]
