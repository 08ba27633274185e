from django.core.cache import cache
from django.db import transaction
from django.http import HttpResponse
from django_filters.rest_framework import DjangoFilterBackend
from drf_spectacular.utils import extend_schema
from rest_framework import filters, status
from rest_framework.decorators import action
from rest_framework.permissions import IsAuthenticated
from rest_framework.request import Request
from rest_framework.response import Response
from rest_framework.viewsets import ModelViewSet, ReadOnlyModelViewSet

from apps.common.caps import Caps
from apps.common.permissions import ReadOnly
from apps.common.views import MultiSerializerMixin
from apps.pipeline.config import PipelineConfig, RenderOptions
from apps.pipeline.models import AnalysisRun, SubstitutionRecord
from apps.pipeline.serializers import (
    RunCreateSerializer,
    RunListSerializer,
    RunRetrieveSerializer,
    SubstitutionListSerializer,
    SubstitutionSerializer,
)
from apps.pipeline.services import run_command
from apps.pipeline.tasks import run_pipeline
from config.settings import CACHE_TIMEOUTS

CONTENT_TYPES = {".svg": "image/svg+xml", ".json": "application/json", ".dot": "text/vnd.graphviz"}


class SubstitutionView(MultiSerializerMixin, ModelViewSet):
    queryset = SubstitutionRecord.objects.all()
    serializer_class = SubstitutionSerializer
    permission_classes = [IsAuthenticated]
    multi_serializer_class = {
        "list": SubstitutionListSerializer,
        "run": RunCreateSerializer,
    }
    filter_backends = [filters.SearchFilter, DjangoFilterBackend]
    search_fields = ["name", "rules"]
    filterset_fields = ["name"]

    @action(detail=True, methods=["post"])
    def run(self, request: Request, pk=None) -> Response:
        record: SubstitutionRecord = self.get_object()
        serializer = self.get_serializer(data=request.data)
        serializer.is_valid(raise_exception=True)

        with transaction.atomic():
            run: AnalysisRun = serializer.save(substitution=record)
            transaction.on_commit(lambda: run_pipeline.delay(run.id))

        return Response(serializer.data, status=status.HTTP_202_ACCEPTED)

    @extend_schema(responses={200: None})
    @action(detail=True, methods=["get"])
    def analysis(self, request: Request, pk=None) -> Response:
        record: SubstitutionRecord = self.get_object()
        cache_key = f"analysis_report_{record.pk}_{record.updated_at.timestamp()}"
        cached_data = cache.get(cache_key)

        if cached_data:
            return Response(cached_data, status=status.HTTP_200_OK)

        config = PipelineConfig(
            rules=record.rules, source=record.name, caps=Caps.from_settings(), render=RenderOptions.from_settings()
        )
        data = run_command("analyze", config).report

        cache.set(cache_key, data, CACHE_TIMEOUTS["ANALYSIS_REPORT"])
        return Response(data, status=status.HTTP_200_OK)


class RunView(MultiSerializerMixin, ReadOnlyModelViewSet):
    queryset = AnalysisRun.objects.select_related("substitution")
    serializer_class = RunRetrieveSerializer
    permission_classes = [IsAuthenticated, ReadOnly]
    multi_serializer_class = {
        "list": RunListSerializer,
    }
    filter_backends = [DjangoFilterBackend]
    filterset_fields = ["status", "command", "substitution"]

    @extend_schema(responses={200: None, 404: None})
    @action(detail=True, methods=["get"], url_path=r"artifacts/(?P<name>[\w.-]+)")
    def artifact(self, request: Request, pk=None, name: str = "") -> HttpResponse:
        run: AnalysisRun = self.get_object()
        if name not in run.artifacts:
            return Response({"detail": f"Run has no artifact {name}"}, status=status.HTTP_404_NOT_FOUND)

        suffix = name[name.rfind(".") :] if "." in name else ""
        return HttpResponse(run.artifacts[name], content_type=CONTENT_TYPES.get(suffix, "text/plain"))
