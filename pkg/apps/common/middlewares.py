import logging
import traceback

from django.http import JsonResponse
from django.utils import translation
from django.utils.deprecation import MiddlewareMixin
from django.utils.translation import gettext as _

from apps.common.errors import CapExceededError, PipelineError, PreconditionError, SubstitutionParseError

logger = logging.getLogger(__name__)

PIPELINE_STATUSES = {
    SubstitutionParseError: 400,
    PreconditionError: 422,
    CapExceededError: 422,
}


class ApiMiddleware(MiddlewareMixin):
    @staticmethod
    def process_request(request):
        request.LANGUAGE_CODE = translation.get_language()

    @staticmethod
    def process_exception(request, exception):
        if isinstance(exception, PipelineError):
            logger.warning(f"ApiMiddleware: Pipeline error: {exception}")
            return JsonResponse(exception.as_dict(), status=PIPELINE_STATUSES.get(type(exception), 400))

        logger.error(traceback.format_exc())

        return JsonResponse(
            {
                "exception": str(exception),
                "detail": _("Something Went Wrong. Please contact support"),
            },
            status=500,
        )
