from apps.pipeline.management.base import PipelineCommand


class Command(PipelineCommand):
    help = "Extends the contour substitution and induces the piecewise rotation of the circle"
    command = "iet"
