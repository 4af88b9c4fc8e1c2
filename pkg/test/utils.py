"""Utils used to support running Tests"""

import logging
import unittest

import numpy as np
from app.core.config import TestConfig
from app.core.models import ObservationFrame
from app.forest.params import ForestParams
from django.conf import settings
from django.test import tag


def slow(test_item):
    """
    Marks a long Monte-Carlo check: tagged "slow" and only run when
    SUBTLE_SLOW_TESTS is set.
    """
    test_item = tag("slow")(test_item)
    return unittest.skipUnless(
        settings.SUBTLE_SLOW_TESTS, "set SUBTLE_SLOW_TESTS=True to run"
    )(test_item)


def silence_logger(name):
    """
    Raises the level of a logger while the decorated test runs, for tests
    that trigger expected warnings.
    """

    def decorator(original_function):
        def new_function(*args, **kwargs):
            logger = logging.getLogger(name)
            previous_logging_level = logger.level
            logger.setLevel(logging.CRITICAL)
            try:
                return original_function(*args, **kwargs)
            finally:
                logger.setLevel(previous_logging_level)

        return new_function

    return decorator


def small_config(**overrides) -> TestConfig:
    """Cheap configuration for tests that run the engine end to end."""
    forest = overrides.pop("forest", {})
    values = {
        "alpha": 0.05,
        "m": 20,
        "l": 100,
        "failure_time": 400,
        "forest": ForestParams(
            **{"n_trees": 5, "min_leaf": 5, "seed": 0, **forest}
        ),
    }
    values.update(overrides)
    return TestConfig(**values)


def two_arm_frame(n=200, p=2, seed=0, effect=0.0) -> ObservationFrame:
    """Balanced two-arm binary data with an optional effect in x1 > 0."""
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, p))
    a = np.tile([0, 1], n // 2 + 1)[:n]
    prob = 0.3 + effect * a * (X[:, 0] > 0)
    y = (rng.uniform(size=n) < prob).astype(float)
    return ObservationFrame.from_arrays(y, a, X)
