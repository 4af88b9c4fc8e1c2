import logging

import sentry_sdk
from django.conf import settings
from sentry_sdk.integrations.django import DjangoIntegration
from sentry_sdk.integrations.logging import LoggingIntegration

if settings.SENTRY_DSN:
    sentry_sdk.init(
        dsn=settings.SENTRY_DSN,
        environment=settings.ENVIRONMENT_NAME,
        release=(
            f"subtle@{settings.BUILD_VERSION}"
            if settings.BUILD_VERSION
            else ""
        ),
        integrations=[
            DjangoIntegration(),
            # log records become breadcrumbs only; app.errors.handlers
            # captures the exceptions that end a command
            LoggingIntegration(level=logging.INFO, event_level=None),
        ],
        sample_rate=settings.SENTRY_SAMPLE_RATE,
        traces_sample_rate=settings.SENTRY_SAMPLE_RATE,
    )
    sentry_sdk.set_tag("sigma_policy", settings.SUBTLE_SIGMA_POLICY)
