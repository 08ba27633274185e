from django.apps import AppConfig


class ContourConfig(AppConfig):
    name = "apps.contour"
