from django.urls import path, include
from rest_framework.routers import DefaultRouter
from .views import SimulationRunViewSet

router = DefaultRouter()
router.register(r'runs', SimulationRunViewSet, basename='run')

urlpatterns = [
    path('', include(router.urls)),
]
