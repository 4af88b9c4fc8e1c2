import os

from config.util import env_bool, env_choice, env_int

PROJECT_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
BASE_DIR = os.path.dirname(PROJECT_DIR)

# Application definition
INSTALLED_APPS = [
    "app.experiments",
]

# Internationalization
# https://docs.djangoproject.com/en/5.0/topics/i18n/

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

# No database is used, the commands only read and write flat files
DATABASES = {}

SECRET_KEY: str = os.environ.get("SECRET_KEY", "")

DEBUG: bool = env_bool("DEBUG")

# Sequential testing configuration

# Number of joblib workers used for forest training, replicates and permutations
SUBTLE_N_JOBS: int = env_int("SUBTLE_N_JOBS", 1)

# Default number of trees per nuisance forest
SUBTLE_N_TREES: int = env_int("SUBTLE_N_TREES", 100)

# Where command artifacts are written when --out-dir is not given
SUBTLE_OUT_DIR: str = os.getenv(
    "SUBTLE_OUT_DIR", os.path.join(BASE_DIR, "out")
)

# What to do with a batch whose contrast variance is zero: "floor" or "skip"
SUBTLE_SIGMA_POLICY: str = env_choice(
    "SUBTLE_SIGMA_POLICY", "floor", ("floor", "skip")
)

# Long Monte-Carlo acceptance tests are only run when this is set
SUBTLE_SLOW_TESTS: bool = env_bool("SUBTLE_SLOW_TESTS")

# logging
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {
            "format": "{levelname} {name} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "simple",
        },
    },
    "root": {
        "handlers": ["console"],
        "level": "WARNING",
    },
    "loggers": {
        "app": {
            "level": os.getenv("SUBTLE_LOG_LEVEL", "INFO"),
        },
    },
}

SENTRY_DSN = os.getenv("SENTRY_DSN", "")
ENVIRONMENT_NAME = os.getenv("ENVIRONMENT_NAME", "production")
SENTRY_SAMPLE_RATE = float(os.getenv("SENTRY_SAMPLE_RATE", "0.1"))

# Generated in the CI/CD process
BUILD_VERSION = os.getenv("BUILD_VERSION", "")
