import json

from django.http import JsonResponse
from django.test import RequestFactory, SimpleTestCase, TestCase, override_settings
from parameterized import parameterized
from rest_framework.reverse import reverse
from rest_framework.test import APIClient

from apps.common.caps import Caps
from apps.common.errors import CapExceededError, PipelineError, PreconditionError, SubstitutionParseError
from apps.common.middlewares import ApiMiddleware


class TestCommon(TestCase):
    def setUp(self) -> None:
        self.client = APIClient()

    def test_health_view(self) -> None:
        response = self.client.get(reverse("health_view"))
        self.assertEqual(response.status_code, 200)
        self.assertTrue(response.json()["live"])
        self.assertEqual(response.json()["caps"]["iterations"], 14)


def view_that_raises(request):
    raise ValueError("Test exception")


class ApiMiddlewareExceptionTestCase(SimpleTestCase):
    def setUp(self):
        self.factory = RequestFactory()
        self.middleware = ApiMiddleware

    def test_process_exception_returns_json_response(self):
        request = self.factory.get("/exception/")
        response = None

        try:
            self.middleware.process_request(request)
            view_that_raises(request)
        except ValueError as e:
            response = self.middleware.process_exception(request, e)

        self.assertIsNotNone(response)
        self.assertIsInstance(response, JsonResponse)
        self.assertEqual(response.status_code, 500)
        self.assertEqual(response["Content-Type"], "application/json")

        content = json.loads(response.content)
        self.assertEqual(content["exception"], "Test exception")
        self.assertEqual(content["detail"], "Something Went Wrong. Please contact support")

    @parameterized.expand(
        [
            (SubstitutionParseError("no rules found", line=3), 400, "parse_error"),
            (PreconditionError("not parageometric"), 422, "precondition"),
            (CapExceededError("too many states", cap="STATE_BUDGET", limit=10), 422, "cap_exceeded"),
        ]
    )
    def test_pipeline_errors_are_client_errors(self, error, status_code, code):
        response = self.middleware.process_exception(self.factory.get("/"), error)

        self.assertEqual(response.status_code, status_code)
        self.assertEqual(json.loads(response.content)["code"], code)


class ErrorsTestCase(SimpleTestCase):
    @parameterized.expand(
        [
            (PreconditionError("gate"), 2),
            (CapExceededError("cap", cap="DEPTH", limit=12), 3),
            (SubstitutionParseError("bad", line=1), 4),
        ]
    )
    def test_exit_codes(self, error: PipelineError, exit_code):
        self.assertEqual(error.exit_code, exit_code)

    def test_parse_error_cites_the_line(self):
        error = SubstitutionParseError("expected a rule", line=7)

        self.assertEqual(str(error), "line 7: expected a rule")
        self.assertEqual(error.as_dict()["line"], 7)

    def test_cap_details(self):
        error = CapExceededError("no stable window", cap="WINDOW_DOUBLINGS", limit=10)

        self.assertEqual(
            error.as_dict(),
            {"code": "cap_exceeded", "detail": "no stable window", "cap": "WINDOW_DOUBLINGS", "limit": 10},
        )


class CapsTestCase(SimpleTestCase):
    def test_defaults(self):
        caps = Caps()

        self.assertEqual((caps.language_length, caps.iterations, caps.depth), (64, 14, 12))

    @override_settings(PIPELINE_CAPS={"DEPTH": "5", "UNKNOWN": 1})
    def test_settings_and_overrides(self):
        caps = Caps.from_settings(iterations=4, shift_bound=None)

        self.assertEqual(caps.depth, 5)
        self.assertEqual(caps.iterations, 4)
        self.assertEqual(caps.shift_bound, 32)

    def test_caps_must_be_positive(self):
        with self.assertRaises(PreconditionError):
            Caps(depth=0)
