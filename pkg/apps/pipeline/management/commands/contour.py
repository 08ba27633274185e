from apps.pipeline.management.base import PipelineCommand


class Command(PipelineCommand):
    help = "Builds the contour substitution and its dual"
    command = "contour"
