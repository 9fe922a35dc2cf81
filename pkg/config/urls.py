"""
URL configuration for the kinetic project.

Read-only API over stored runs and check reports:
    /api/runs/    SimulationRun records
    /api/checks/  CheckReport records
"""
from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path("admin/", admin.site.urls),

    # API endpoints
    path("api/", include('scenarios.urls')),
    path("api/", include('verify.urls')),
]
