from apps.pipeline.management.base import PipelineCommand


class Command(PipelineCommand):
    help = "Finds the singular classes, the index and the parageometric verdict"
    command = "singular"
