from django.urls import path, include
from rest_framework.routers import DefaultRouter
from .views import CheckReportViewSet

router = DefaultRouter()
router.register(r'checks', CheckReportViewSet, basename='check')

urlpatterns = [
    path('', include(router.urls)),
]
