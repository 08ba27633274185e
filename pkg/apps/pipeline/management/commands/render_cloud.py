from apps.pipeline.management.base import PipelineCommand


class Command(PipelineCommand):
    help = "Draws the Rauzy fractal as a point cloud"
    command = "render_cloud"
