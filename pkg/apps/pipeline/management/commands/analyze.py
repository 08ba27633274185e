from apps.pipeline.management.base import PipelineCommand


class Command(PipelineCommand):
    help = "Checks primitivity, Pisot data, the prefix-suffix automaton and strong coincidence"
    command = "analyze"
