from unittest.mock import patch

from django.core.cache import cache
from django.urls import reverse
from rest_framework import status
from rest_framework.test import APITestCase
from rest_framework_simplejwt.tokens import RefreshToken

from apps.pipeline.factories import AnalysisRunFactory, SubstitutionRecordFactory, UserFactory
from apps.pipeline.models import AnalysisRun, SubstitutionRecord
from apps.pipeline.services import COMMANDS, run_command
from apps.substitutions.fixtures import FIXTURES


class SubstitutionAPITestCase(APITestCase):
    @classmethod
    def setUpTestData(cls):
        cls.user = UserFactory()
        cls.record = SubstitutionRecordFactory(name="tribonacci")

    def setUp(self):
        cache.clear()
        self.set_credentials(self.user)

    def set_credentials(self, user):
        token = RefreshToken.for_user(user).access_token
        self.client.credentials(HTTP_AUTHORIZATION=f"Bearer {token}")

    @staticmethod
    def _get_list_url():
        return reverse("substitutions-list")

    @staticmethod
    def _get_run_url(pk):
        return reverse("substitutions-run", kwargs={"pk": pk})

    @staticmethod
    def _get_analysis_url(pk):
        return reverse("substitutions-analysis", kwargs={"pk": pk})

    def test_list_unauthorized(self):
        self.client.credentials()

        response = self.client.get(self._get_list_url())

        self.assertEqual(response.status_code, status.HTTP_401_UNAUTHORIZED)

    def test_list(self):
        response = self.client.get(self._get_list_url())

        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response.data["results"], [{"id": self.record.id, "name": "tribonacci", "runs_count": 0}])

    def test_search_by_name(self):
        SubstitutionRecordFactory(name="example1", rules=FIXTURES["example1"])

        response = self.client.get(self._get_list_url(), {"search": "example"})

        self.assertEqual([item["name"] for item in response.data["results"]], ["example1"])

    def test_create(self):
        data = {"name": "fibonacci", "rules": "a -> ab\nb -> a"}
        response = self.client.post(self._get_list_url(), data, format="json")

        self.assertEqual(response.status_code, status.HTTP_201_CREATED)
        self.assertEqual(response.data["letters"], ["a", "b"])
        self.assertTrue(SubstitutionRecord.objects.filter(name="fibonacci").exists())

    def test_create_with_malformed_rules(self):
        data = {"name": "broken", "rules": "a -> ab\nb => a"}
        response = self.client.post(self._get_list_url(), data, format="json")

        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        self.assertIn("line 2", str(response.data["rules"][0]))

    @patch("apps.pipeline.views.run_pipeline.delay")
    def test_run_schedules_the_pipeline(self, mock_delay):
        with self.captureOnCommitCallbacks(execute=True):
            response = self.client.post(
                self._get_run_url(self.record.id), {"command": "singular", "iterations": 2}, format="json"
            )

        self.assertEqual(response.status_code, status.HTTP_202_ACCEPTED)
        run = AnalysisRun.objects.get(id=response.data["id"])
        self.assertEqual(run.status, AnalysisRun.Status.PENDING)
        self.assertEqual(run.requested_by, self.user)
        self.assertEqual(run.substitution, self.record)
        mock_delay.assert_called_once_with(run.id)

    @patch("apps.pipeline.views.run_pipeline.delay")
    def test_run_with_conflicting_options(self, mock_delay):
        response = self.client.post(
            self._get_run_url(self.record.id), {"command": "embed", "prune": True, "cover": "adjacency"}, format="json"
        )

        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        mock_delay.assert_not_called()

    @patch("apps.pipeline.views.run_pipeline.delay")
    def test_run_unknown_command(self, mock_delay):
        response = self.client.post(self._get_run_url(self.record.id), {"command": "animate"}, format="json")

        self.assertEqual(response.status_code, status.HTTP_400_BAD_REQUEST)
        mock_delay.assert_not_called()

    @patch("apps.pipeline.views.run_command", wraps=run_command)
    def test_analysis_is_cached(self, mock_run_command):
        first = self.client.get(self._get_analysis_url(self.record.id))
        second = self.client.get(self._get_analysis_url(self.record.id))

        self.assertEqual(first.status_code, status.HTTP_200_OK)
        self.assertTrue(first.data["primitive"])
        self.assertEqual(first.data, second.data)
        mock_run_command.assert_called_once()

    def test_analysis_of_a_reducible_substitution(self):
        record = SubstitutionRecordFactory(name="reducible", rules="a -> ab\nb -> b")

        response = self.client.get(self._get_analysis_url(record.id))

        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertFalse(response.data["primitive"])
        self.assertNotIn("p_max", response.data)

    def test_commands_match_the_pipeline(self):
        self.assertEqual(set(AnalysisRun.Command.values), set(COMMANDS))


class RunAPITestCase(APITestCase):
    @classmethod
    def setUpTestData(cls):
        cls.user = UserFactory()
        cls.completed = AnalysisRunFactory(
            status=AnalysisRun.Status.COMPLETED,
            command=AnalysisRun.Command.RENDER_CLOUD,
            report={"points": 3},
            artifacts={"cloud.svg": "<svg></svg>"},
        )
        cls.failed = AnalysisRunFactory(status=AnalysisRun.Status.FAILED, error="not primitive")

    def setUp(self):
        token = RefreshToken.for_user(self.user).access_token
        self.client.credentials(HTTP_AUTHORIZATION=f"Bearer {token}")

    def test_filter_by_status(self):
        response = self.client.get(reverse("runs-list"), {"status": AnalysisRun.Status.FAILED})

        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual([item["id"] for item in response.data["results"]], [self.failed.id])

    def test_retrieve(self):
        response = self.client.get(reverse("runs-detail", kwargs={"pk": self.completed.id}))

        self.assertEqual(response.data["report"], {"points": 3})
        self.assertEqual(response.data["artifacts"], {"cloud.svg": "<svg></svg>"})

    def test_runs_are_read_only(self):
        response = self.client.post(reverse("runs-list"), {"command": "analyze"}, format="json")

        self.assertEqual(response.status_code, status.HTTP_403_FORBIDDEN)

    def test_artifact(self):
        url = reverse("runs-artifact", kwargs={"pk": self.completed.id, "name": "cloud.svg"})

        response = self.client.get(url)

        self.assertEqual(response.status_code, status.HTTP_200_OK)
        self.assertEqual(response["Content-Type"], "image/svg+xml")
        self.assertEqual(response.content, b"<svg></svg>")

    def test_missing_artifact(self):
        url = reverse("runs-artifact", kwargs={"pk": self.completed.id, "name": "tree.svg"})

        response = self.client.get(url)

        self.assertEqual(response.status_code, status.HTTP_404_NOT_FOUND)
