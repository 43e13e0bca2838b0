from django.apps import AppConfig


class ProximityConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'Proximity'
