"""
Celery application for background scenario runs and checks.

Tasks live in scenarios/tasks.py and verify/tasks.py. With
CELERY_TASK_ALWAYS_EAGER (default on) they run inline, so no broker is
needed for desk use.
"""
import os
from celery import Celery

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'config.settings')

app = Celery('kinetic')

# all celery keys in settings carry the CELERY_ prefix
app.config_from_object('django.conf:settings', namespace='CELERY')

app.autodiscover_tasks()
