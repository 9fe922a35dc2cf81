from django.apps import AppConfig


class VelocityConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "velocity"
