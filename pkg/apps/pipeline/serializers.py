from rest_framework import serializers

from apps.common.errors import SubstitutionParseError
from apps.pipeline.config import ADJACENCY
from apps.pipeline.models import AnalysisRun, SubstitutionRecord
from apps.substitutions.core import parse_substitution


class SubstitutionSerializer(serializers.ModelSerializer):
    letters = serializers.SerializerMethodField()

    class Meta:
        model = SubstitutionRecord
        fields = ("id", "name", "rules", "letters", "created_at")

    def get_letters(self, obj: SubstitutionRecord) -> list[str]:
        return list(obj.substitution.alphabet.names)

    def validate_rules(self, value):
        try:
            parse_substitution(value)
        except SubstitutionParseError as error:
            raise serializers.ValidationError(error.message) from error
        return value


class SubstitutionListSerializer(serializers.ModelSerializer):
    runs_count = serializers.IntegerField(source="runs.count", read_only=True)

    class Meta:
        model = SubstitutionRecord
        fields = ("id", "name", "runs_count")


class RunCreateSerializer(serializers.ModelSerializer):
    requested_by = serializers.HiddenField(default=serializers.CurrentUserDefault(), write_only=True)
    iterations = serializers.IntegerField(min_value=0, required=False, allow_null=True)
    cover = serializers.ChoiceField(choices=["", ADJACENCY], required=False, default="")

    class Meta:
        model = AnalysisRun
        fields = ("id", "command", "iterations", "prune", "cover", "requested_by", "status")
        read_only_fields = ("status",)

    def validate(self, attrs):
        if attrs.get("prune") and attrs.get("cover"):
            raise serializers.ValidationError("Pruning and the adjacency covering exclude each other.")
        return attrs


class RunListSerializer(serializers.ModelSerializer):
    class Meta:
        model = AnalysisRun
        fields = ("id", "substitution", "command", "status", "digest", "created_at")


class RunRetrieveSerializer(serializers.ModelSerializer):
    class Meta:
        model = AnalysisRun
        fields = (
            "id",
            "substitution",
            "command",
            "iterations",
            "prune",
            "cover",
            "digest",
            "status",
            "report",
            "artifacts",
            "error",
            "created_at",
            "updated_at",
        )
