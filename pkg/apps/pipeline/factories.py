import factory
from django.contrib.auth.models import User
from factory.django import DjangoModelFactory
from faker import Faker

from apps.pipeline.models import AnalysisRun, SubstitutionRecord
from apps.substitutions.fixtures import FIXTURES

fake = Faker()


class UserFactory(DjangoModelFactory):
    class Meta:
        model = User

    username = factory.LazyAttribute(lambda _: fake.unique.user_name())
    email = factory.LazyAttribute(lambda _: fake.unique.email())
    password = factory.PostGenerationMethodCall("set_password", "password123")


class SubstitutionRecordFactory(DjangoModelFactory):
    class Meta:
        model = SubstitutionRecord

    name = factory.Sequence(lambda number: f"tribonacci-{number}")
    rules = FIXTURES["tribonacci"]


class AnalysisRunFactory(DjangoModelFactory):
    class Meta:
        model = AnalysisRun

    substitution = factory.SubFactory(SubstitutionRecordFactory)
    requested_by = factory.SubFactory(UserFactory)
    command = AnalysisRun.Command.ANALYZE
    iterations = 2
