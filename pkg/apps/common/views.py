from rest_framework import serializers
from rest_framework.generics import GenericAPIView
from rest_framework.permissions import AllowAny
from rest_framework.request import Request
from rest_framework.response import Response

from apps.common.caps import Caps


class HealthSerializer(serializers.Serializer):
    live = serializers.BooleanField()
    caps = serializers.DictField(child=serializers.IntegerField())


class HealthView(GenericAPIView):
    authentication_classes = ()
    permission_classes = (AllowAny,)
    serializer_class = HealthSerializer

    @staticmethod
    def get(request: Request) -> Response:
        return Response({"live": True, "caps": Caps.from_settings().as_dict()})


class MultiSerializerMixin:
    multi_serializer_class: dict[str, type[serializers.Serializer]] | None = None

    def get_serializer_class(self):
        if self.multi_serializer_class and self.action in self.multi_serializer_class:
            return self.multi_serializer_class[self.action]
        return self.serializer_class
