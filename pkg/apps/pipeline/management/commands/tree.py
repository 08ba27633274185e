from apps.pipeline.management.base import PipelineCommand


class Command(PipelineCommand):
    help = "Builds the tree substitution and reports its iterates"
    command = "tree"
