"""
WSGI entry point for the kinetic project.

Serves the admin and the read-only runs/checks API; numerical work runs
through the `kinetic` management command or Celery workers.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "config.settings")

application = get_wsgi_application()
