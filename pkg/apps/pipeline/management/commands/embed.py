from apps.pipeline.management.base import PipelineCommand


class Command(PipelineCommand):
    help = "Embeds iterates of the tree substitution in the contracting plane"
    command = "embed"
