from django.utils.translation import gettext_lazy as _
from django.views import View
from rest_framework.permissions import SAFE_METHODS, BasePermission
from rest_framework.request import Request


class ReadOnly(BasePermission):
    """Runs are written by the pipeline task only; the API may read them."""

    message = _("Runs are created through the run action of a substitution.")

    def has_permission(self, request: Request, view: View) -> bool:
        return request.method in SAFE_METHODS
