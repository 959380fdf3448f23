from django.apps import AppConfig


class HaarBasisConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'haar_basis'
