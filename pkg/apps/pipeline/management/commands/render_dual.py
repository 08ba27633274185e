from apps.pipeline.management.base import PipelineCommand


class Command(PipelineCommand):
    help = "Draws an E1* patch of the dual substitution"
    command = "render_dual"
