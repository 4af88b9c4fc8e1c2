import numpy as np
from app.core.exceptions import ValidationError
from app.lib.seeding import make_rng
from app.sequential.validation import (
    martingale_check,
    oracle_r_path,
    oracle_r_statistics,
)
from app.simgen.models import SimModel
from django.test import SimpleTestCase
from scipy import stats

from test.utils import slow

NULL_MODEL = SimModel.create("I", 0.0)


class TestOracleRPath(SimpleTestCase):
    def test_needs_a_null_model(self):
        with self.assertRaisesMessage(ValidationError, "c = 0"):
            oracle_r_path(SimModel.create("I", 1.0), 5, 20, 100, make_rng(0))

    def test_reproducible(self):
        first = oracle_r_statistics(NULL_MODEL, k=5, l=100, n_reps=3)
        second = oracle_r_statistics(NULL_MODEL, k=5, l=100, n_reps=3)
        np.testing.assert_array_equal(first, second)
        self.assertTrue(np.isfinite(first).all())

    def test_invalid_counts(self):
        with self.assertRaises(ValidationError):
            oracle_r_statistics(NULL_MODEL, k=0)


class TestLargeSampleBehaviour(SimpleTestCase):
    @slow
    def test_r_is_standard_normal_under_the_null(self):
        values = oracle_r_statistics(NULL_MODEL, k=50, n_reps=2000)
        self.assertGreater(stats.kstest(values, "norm").pvalue, 0.01)

    @slow
    def test_probability_ratio_is_a_martingale(self):
        check = martingale_check(NULL_MODEL)
        self.assertLess(check.relative_error, 0.05)
