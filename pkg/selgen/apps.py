from django.apps import AppConfig


class SelgenConfig(AppConfig):
    name = 'selgen'
    verbose_name = 'Question generation experiments'
    default_auto_field = 'django.db.models.AutoField'
