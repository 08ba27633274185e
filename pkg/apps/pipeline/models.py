from django.contrib.auth.models import User
from django.db import models

from apps.common.caps import Caps
from apps.common.models import TimeStampMixin
from apps.pipeline.config import PipelineConfig, RenderOptions
from apps.substitutions.core import Substitution, parse_substitution


class SubstitutionRecord(TimeStampMixin, models.Model):
    name = models.CharField(max_length=100, unique=True)
    rules = models.TextField()

    class Meta:
        ordering = ["name"]

    def __str__(self):
        return self.name

    @property
    def substitution(self) -> Substitution:
        return parse_substitution(self.rules)


class AnalysisRun(TimeStampMixin, models.Model):
    class Command(models.TextChoices):
        ANALYZE = "analyze"
        SINGULAR = "singular"
        TREE = "tree"
        EMBED = "embed"
        CONTOUR = "contour"
        IET = "iet"
        RENDER_CLOUD = "render_cloud"
        RENDER_DUAL = "render_dual"

    class Status(models.TextChoices):
        PENDING = "Pending"
        RUNNING = "Running"
        COMPLETED = "Completed"
        FAILED = "Failed"

    substitution = models.ForeignKey(SubstitutionRecord, on_delete=models.CASCADE, related_name="runs")
    requested_by = models.ForeignKey(User, on_delete=models.SET_NULL, related_name="runs", null=True, blank=True)
    command = models.CharField(max_length=20, choices=Command.choices)
    iterations = models.PositiveSmallIntegerField(null=True, blank=True)
    prune = models.BooleanField(default=False)
    cover = models.CharField(max_length=20, blank=True, default="")
    digest = models.CharField(max_length=64, blank=True, default="")
    status = models.CharField(max_length=20, choices=Status.choices, default=Status.PENDING)
    report = models.JSONField(null=True, blank=True)
    artifacts = models.JSONField(default=dict, blank=True)
    error = models.TextField(blank=True, default="")

    class Meta:
        ordering = ["-created_at"]

    def __str__(self):
        return f"{self.command} on {self.substitution}"


    def pipeline_config(self) -> PipelineConfig:
        caps = Caps.from_settings()
        return PipelineConfig(
            rules=self.substitution.rules,
            source=self.substitution.name,
            caps=caps,
            iterations=caps.iterations if self.iterations is None else self.iterations,
            prune=self.prune,
            cover=self.cover or None,
            render=RenderOptions.from_settings(),
        )
