import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase, override_settings
from parameterized import parameterized

from apps.common.caps import Caps
from apps.common.errors import PreconditionError, SubstitutionParseError
from apps.pipeline.config import ADJACENCY, DEFAULT_PALETTE, PLANAR, PipelineConfig, RenderOptions
from apps.substitutions.fixtures import FIXTURES


class PipelineConfigTestCase(SimpleTestCase):
    def test_fixture_by_name(self):
        config = PipelineConfig.from_options("tribonacci", iterations=2)

        self.assertEqual(config.rules, FIXTURES["tribonacci"])
        self.assertEqual(config.substitution.size, 3)
        self.assertEqual(config.orders, PLANAR)
        self.assertIsNone(config.orders_data)

    def test_rules_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "fibonacci.txt"
            path.write_text("a -> ab\nb -> a\n")

            config = PipelineConfig.from_options(str(path))

        self.assertEqual(config.substitution.render(), "a -> ab\nb -> a")
        self.assertEqual(config.source, str(path))

    def test_missing_source(self):
        with self.assertRaises(PreconditionError):
            PipelineConfig.from_options("/no/such/rules.txt")

    def test_explicit_orders_file(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "orders.json"
            path.write_text(json.dumps({"mode": "explicit", "tiles": {}, "patches": {}}))

            config = PipelineConfig.from_options("tribonacci", orders=str(path))

        self.assertEqual(config.orders, "explicit")
        self.assertEqual(config.orders_data["mode"], "explicit")

    def test_orders_file_must_be_json(self):
        with tempfile.TemporaryDirectory() as directory:
            path = Path(directory) / "orders.json"
            path.write_text("planar, clockwise")

            with self.assertRaises(PreconditionError):
                PipelineConfig.from_options("tribonacci", orders=str(path))

    @parameterized.expand(
        [
            ({"iterations": -1},),
            ({"iterations": 15},),
            ({"cover": "voronoi"},),
            ({"prune": True, "cover": ADJACENCY},),
        ]
    )
    def test_invalid_options(self, options):
        with self.assertRaises(PreconditionError):
            PipelineConfig(rules=FIXTURES["tribonacci"], **options)

    @override_settings(PIPELINE_CAPS={"ITERATIONS": 5, "DEPTH": 7})
    def test_caps_from_settings_and_options(self):
        config = PipelineConfig.from_options("tribonacci", depth=3)

        self.assertEqual(config.iterations, 5)
        self.assertEqual(config.caps, Caps(iterations=5, depth=3))

    def test_parse_errors_surface_with_the_substitution(self):
        config = PipelineConfig(rules="a -> ab\nb ->\n")

        with self.assertRaises(SubstitutionParseError) as context:
            _ = config.substitution

        self.assertEqual(context.exception.line, 2)

    def test_digest_is_stable(self):
        first = PipelineConfig(rules=FIXTURES["tribonacci"], source="tribonacci")
        second = PipelineConfig(rules=FIXTURES["tribonacci"], source="tribonacci")

        self.assertEqual(first.digest(), second.digest())
        self.assertEqual(len(first.digest()), 64)
        self.assertNotEqual(first.digest(), first.with_iterations(4).digest())
        self.assertNotEqual(first.digest(), PipelineConfig(rules=FIXTURES["tribonacci"], prune=True).digest())


class RenderOptionsTestCase(SimpleTestCase):
    def test_colors_cycle_through_the_palette(self):
        options = RenderOptions()

        self.assertEqual(options.color(0), DEFAULT_PALETTE[0])
        self.assertEqual(options.color(len(DEFAULT_PALETTE) + 2), DEFAULT_PALETTE[2])

    @override_settings(RENDER_PALETTE=["#000000", "#ffffff"], RENDER_OPTIONS={"STROKE": 2, "SIZE": 4})
    def test_from_settings(self):
        options = RenderOptions.from_settings()

        self.assertEqual(options.palette, ("#000000", "#ffffff"))
        self.assertEqual(options.stroke, 2.0)
        self.assertEqual(options.size, 4.0)
        self.assertEqual(options.point_size, 1.5)
