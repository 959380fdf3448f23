from django.apps import AppConfig


class LpGridConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'lp_grid'
