from django.urls import include, path
from rest_framework.routers import DefaultRouter

from apps.pipeline.views import RunView, SubstitutionView

router = DefaultRouter()

router.register("substitutions", SubstitutionView, basename="substitutions")
router.register("runs", RunView, basename="runs")

urlpatterns = [
    path("", include(router.urls)),
]
