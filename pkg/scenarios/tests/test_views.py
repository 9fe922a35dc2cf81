"""
Tests for the runs API and the SimulationRun model.

Tests cover:
- Authentication on the runs endpoint
- Listing, pagination and filtering
- Read-only routes
- Model string form and finished state
"""

import pytest
from django.contrib.auth import get_user_model
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APIClient

from scenarios.tests.factories import SimulationRunFactory


@pytest.fixture
def client():
    user = get_user_model().objects.create_user(username="analyst", password="testpass123")
    api = APIClient()
    api.force_authenticate(user=user)
    return api


@pytest.mark.django_db
class TestSimulationRunViewSet:
    """Tests for /api/runs/"""

    def test_requires_authentication(self):
        """Anonymous requests are refused"""
        response = APIClient().get(reverse("run-list"))

        assert response.status_code in (status.HTTP_401_UNAUTHORIZED, status.HTTP_403_FORBIDDEN)

    def test_list_runs(self, client):
        """Runs are listed with pagination"""
        SimulationRunFactory.create_batch(3)

        response = client.get(reverse("run-list"))

        assert response.status_code == status.HTTP_200_OK
        assert response.data["count"] == 3
        assert len(response.data["results"]) == 3
        assert "scenario_text" in response.data["results"][0]

    def test_filter_by_status(self, client):
        """status narrows the list"""
        SimulationRunFactory(status="passed")
        aborted = SimulationRunFactory(status="aborted", exit_code=3)

        response = client.get(reverse("run-list"), {"status": "aborted"})

        assert response.data["count"] == 1
        assert response.data["results"][0]["id"] == str(aborted.id)

    def test_filter_by_config_hash(self, client):
        """Runs of one scenario are found by hash"""
        run = SimulationRunFactory()
        SimulationRunFactory()

        response = client.get(reverse("run-list"), {"config_hash": run.config_hash})

        assert [item["id"] for item in response.data["results"]] == [str(run.id)]

    def test_retrieve(self, client):
        """A single run is returned by id"""
        run = SimulationRunFactory(name="desk")

        response = client.get(reverse("run-detail", args=[run.id]))

        assert response.status_code == status.HTTP_200_OK
        assert response.data["name"] == "desk"

    def test_read_only(self, client):
        """Runs cannot be created over the API"""
        response = client.post(reverse("run-list"), {"name": "desk"})

        assert response.status_code == status.HTTP_405_METHOD_NOT_ALLOWED


@pytest.mark.django_db
class TestSimulationRunModel:
    """Tests for SimulationRun"""

    def test_str(self):
        """String form shows name and status"""
        run = SimulationRunFactory(name="desk", status="failed")

        assert str(run) == "desk (failed)"

    @pytest.mark.parametrize("run_status,finished", [
        ("pending", False),
        ("running", False),
        ("passed", True),
        ("failed", True),
        ("aborted", True),
    ])
    def test_is_finished(self, run_status, finished):
        """Only terminal statuses count as finished"""
        run = SimulationRunFactory(status=run_status)

        assert run.is_finished is finished
