import logging

from celery import shared_task

from apps.common.errors import PipelineError
from apps.pipeline.models import AnalysisRun
from apps.pipeline.services import run_command

logger = logging.getLogger("apps.pipeline")


@shared_task
def run_pipeline(run_id: int):
    run = AnalysisRun.objects.select_related("substitution").filter(id=run_id).first()
    try:
        if not run:
            raise ValueError("Run not found")
        if run.status != AnalysisRun.Status.PENDING:
            raise ValueError(f"Run {run_id} is already {run.status.lower()}")

        run.status = AnalysisRun.Status.RUNNING
        run.save(update_fields=["status", "updated_at"])

        config = run.pipeline_config()
        run.digest = config.digest()
        result = run_command(run.command, config, render=True)

        run.report = result.report
        run.artifacts = result.artifacts
        run.status = AnalysisRun.Status.COMPLETED
        run.save()
        return True
    except ValueError as error:
        logger.error(f"run_pipeline: Validation error: {error}")
        return False
    except PipelineError as error:
        logger.error(f"run_pipeline: Pipeline error: {error}")
        run.status = AnalysisRun.Status.FAILED
        run.error = str(error)
        run.report = {"command": run.command, "error": error.as_dict()}
        run.save()
        return False
