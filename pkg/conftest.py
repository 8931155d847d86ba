"""Configure Django for running the App test-suite under pytest."""
import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "SubtypeLab.settings")
django.setup()
