import json
import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase


class PipelineCommandTestCase(SimpleTestCase):
    def setUp(self):
        self.directory = tempfile.TemporaryDirectory()
        self.out = Path(self.directory.name)

    def tearDown(self):
        self.directory.cleanup()

    def test_analyze_prints_json(self):
        stdout = StringIO()

        call_command("analyze", input="tribonacci", json=True, stdout=stdout)

        report = json.loads(stdout.getvalue())
        self.assertEqual(report["command"], "analyze")
        self.assertEqual(report["source"], "tribonacci")
        self.assertTrue(report["primitive"])

    def test_contour_writes_its_files(self):
        call_command("contour", input="tribonacci", out=self.out, stdout=StringIO())

        self.assertEqual(
            sorted(path.name for path in self.out.iterdir()),
            ["chi.txt", "chi_dual.txt", "orders.json", "report.json"],
        )

    def test_orders_written_by_contour_are_accepted(self):
        call_command("contour", input="tribonacci", out=self.out, stdout=StringIO())
        first = sorted((self.out / "chi.txt").read_text().splitlines())
        again = self.out / "again"

        call_command("contour", input="tribonacci", orders=str(self.out / "orders.json"), out=again, stdout=StringIO())

        self.assertEqual(sorted((again / "chi.txt").read_text().splitlines()), first)

    def test_same_options_same_bytes(self):
        first, second = self.out / "first", self.out / "second"

        call_command("render_cloud", input="tribonacci", iterations=4, out=first, stdout=StringIO())
        call_command("render_cloud", input="tribonacci", iterations=4, out=second, stdout=StringIO())

        for name in ("report.json", "cloud.svg"):
            self.assertEqual((first / name).read_bytes(), (second / name).read_bytes())

    def test_missing_input(self):
        with self.assertRaises(CommandError) as context:
            call_command("analyze", input=str(self.out / "missing.txt"), stdout=StringIO())

        self.assertEqual(context.exception.returncode, 2)

    def test_parse_error(self):
        rules = self.out / "broken.txt"
        rules.write_text("a -> ab\nb => a\n")

        with self.assertRaises(CommandError) as context:
            call_command("analyze", input=str(rules), stdout=StringIO())

        self.assertEqual(context.exception.returncode, 4)
        self.assertIn("line 2", str(context.exception))

    def test_cap_exceeded(self):
        with self.assertRaises(CommandError) as context:
            call_command("tree", input="tribonacci", iterations=1, depth=1, out=self.out, stdout=StringIO())

        self.assertEqual(context.exception.returncode, 3)
        report = json.loads((self.out / "report.json").read_text())
        self.assertEqual(report["caps_hit"], "DEPTH")
        self.assertEqual(report["caps"]["depth"], 1)

    def test_non_primitive_input_is_refused(self):
        rules = self.out / "reducible.txt"
        rules.write_text("a -> ab\nb -> b\n")

        with self.assertRaises(CommandError) as context:
            call_command("tree", input=str(rules), iterations=1, stdout=StringIO())

        self.assertEqual(context.exception.returncode, 2)

    def test_iterations_beyond_the_cap(self):
        with self.assertRaises(CommandError) as context:
            call_command("analyze", input="tribonacci", iterations=3, max_iterations=2, stdout=StringIO())

        self.assertEqual(context.exception.returncode, 2)
