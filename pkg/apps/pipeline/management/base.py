import json
import logging
from dataclasses import fields
from pathlib import Path

from django.core.management.base import BaseCommand, CommandError

from apps.common.caps import Caps
from apps.common.errors import PipelineError
from apps.pipeline.config import ADJACENCY, PLANAR, PipelineConfig
from apps.pipeline.services import PipelineResult, envelope, run_command

logger = logging.getLogger("apps.pipeline")

REPORT_NAME = "report.json"


def dump(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def cap_option(name: str) -> str:
    """The ITERATIONS cap is --max-iterations since --iterations picks the iterate count."""
    return "--max-iterations" if name == "iterations" else f"--{name.replace('_', '-')}"


class PipelineCommand(BaseCommand):
    """Shared options of the pipeline commands; subclasses name the stage they run."""

    command: str

    def add_arguments(self, parser):
        parser.add_argument("--input", required=True, help="Rules file, or one of the bundled fixture names")
        parser.add_argument("--iterations", type=int, help="Number of iterates; defaults to the ITERATIONS cap")
        parser.add_argument("--prune", action="store_true", help="Prune the tree substitution before embedding")
        parser.add_argument("--cover", choices=[ADJACENCY], help="Build the adjacency covering instead of pruning")
        parser.add_argument("--orders", default=PLANAR, help="'planar', or a JSON file of explicit cyclic orders")
        parser.add_argument("--out", type=Path, help="Directory receiving report.json and the artifacts")
        parser.add_argument("--json", action="store_true", help="Print the report as JSON")
        parser.add_argument("--svg", action="store_true", help="Render SVG pictures where the stage has them")
        for cap in fields(Caps):
            parser.add_argument(cap_option(cap.name), dest=f"cap_{cap.name}", type=int, help="Cap override")

    def handle(self, *args, **options):
        out = Path(options["out"]) if options["out"] else None
        try:
            config = PipelineConfig.from_options(
                options["input"],
                iterations=options["iterations"],
                prune=options["prune"],
                cover=options["cover"],
                orders=options["orders"],
                **{cap.name: options.get(f"cap_{cap.name}") for cap in fields(Caps)},
            )
        except PipelineError as error:
            raise CommandError(str(error), returncode=error.exit_code) from error

        try:
            result = run_command(self.command, config, render=options["svg"])
        except PipelineError as error:
            logger.error(f"{self.command}: Pipeline error: {error}")
            if out:
                self.write(PipelineResult(self.command, envelope(self.command, config, {}, error)), out)
            raise CommandError(str(error), returncode=error.exit_code) from error

        if out:
            self.write(result, out)
            if not options["json"]:
                written = len(result.artifacts) + 1
                self.stdout.write(self.style.SUCCESS(f"{self.command}: wrote {written} files to {out}"))
        if options["json"]:
            self.stdout.write(dump(result.report), ending="")
        elif not out:
            self.stdout.write(self.style.SUCCESS(f"{self.command}: done ({result.report['digest'][:12]})"))

    @staticmethod
    def write(result: PipelineResult, directory: Path) -> None:
        directory.mkdir(parents=True, exist_ok=True)
        (directory / REPORT_NAME).write_text(dump(result.report))
        for name, content in sorted(result.artifacts.items()):
            (directory / name).write_text(content)
