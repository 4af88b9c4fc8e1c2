import os

from config.util import env_bool

from .base import *

DEBUG = env_bool("DEBUG")

SENTRY_SAMPLE_RATE = float(os.getenv("SENTRY_SAMPLE_RATE", "1.0"))

if DEBUG:
    # logging
    LOGGING["root"]["level"] = "DEBUG"  # noqa: F405
    LOGGING["loggers"]["app"]["level"] = "DEBUG"  # noqa: F405
