import logging
from contextlib import contextmanager

import sentry_sdk
from app.core.exceptions import NumericalError, SubtleError
from django.conf import settings
from django.core.management.base import CommandError

from .constants import EXIT_INPUT_ERROR, EXIT_INTERNAL_ERROR

logger = logging.getLogger(__name__)


def exit_code_for(exception: BaseException) -> int:
    """1 for bad input or configuration, 2 for numeric and internal failures."""
    if isinstance(exception, NumericalError):
        return EXIT_INTERNAL_ERROR
    if isinstance(exception, (SubtleError, FileNotFoundError)):
        return EXIT_INPUT_ERROR
    return EXIT_INTERNAL_ERROR


@contextmanager
def command_errors():
    """Centralised exception handling and logging for management commands.

    Errors leave as CommandError so Django prints the message and exits with
    the mapped code."""
    try:
        yield
    except CommandError:
        raise
    except Exception as exception:
        # show the traceback in DEBUG mode
        if settings.DEBUG:
            raise
        code = exit_code_for(exception)
        if code == EXIT_INPUT_ERROR:
            logger.error(str(exception))
        else:
            logger.exception(exception)
            sentry_sdk.capture_exception(exception)
        raise CommandError(str(exception), returncode=code) from exception
