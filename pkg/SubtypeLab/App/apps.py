"""
App/apps.py
"""
from django.apps import AppConfig


class AppConfig(AppConfig):
    name = 'App'
    verbose_name = 'Subtype classifier'
