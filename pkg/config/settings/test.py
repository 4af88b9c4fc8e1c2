import os

from config.util import env_bool, env_int

from .base import *
from .base import BASE_DIR, INSTALLED_APPS

INSTALLED_APPS = INSTALLED_APPS + ["test"]

SECRET_KEY = "abc123"

DEBUG = False

# CI profile: smaller forests, single worker
SUBTLE_N_TREES = env_int("SUBTLE_N_TREES", 50)
SUBTLE_N_JOBS = env_int("SUBTLE_N_JOBS", 1)
SUBTLE_OUT_DIR = os.path.join(BASE_DIR, "out", "test")
SUBTLE_SLOW_TESTS = env_bool("SUBTLE_SLOW_TESTS")

LOGGING["loggers"]["app"]["level"] = "ERROR"  # noqa: F405

ENVIRONMENT_NAME = "test"
SENTRY_SAMPLE_RATE = 0
