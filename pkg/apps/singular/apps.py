from django.apps import AppConfig


class SingularConfig(AppConfig):
    name = "apps.singular"
