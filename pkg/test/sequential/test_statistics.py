import math

import numpy as np
from app.core.constants import LAMBDA_CAP
from app.core.exceptions import ValidationError
from app.sequential.statistics import (
    compute_lambda,
    delta_hat,
    lambda_closed_form,
    lambda_quadrature,
    log_lambda_closed_form,
    probability_ratio,
    r_statistic,
    truncated_normal_density,
)
from django.test import SimpleTestCase
from scipy import integrate


class TestRStatistic(SimpleTestCase):
    def test_values(self):
        self.assertEqual(r_statistic(4, 3.0), 1.5)
        self.assertEqual(delta_hat(3.0, 6.0), 0.5)

    def test_invalid(self):
        with self.assertRaisesMessage(ValidationError, "k must be at least 1"):
            r_statistic(0, 1.0)
        with self.assertRaises(ValidationError):
            delta_hat(1.0, 0.0)


class TestLambdaClosedForm(SimpleTestCase):
    def test_hand_value(self):
        self.assertAlmostEqual(
            lambda_closed_form(1, 1.0, 0.0, 1.0), math.sqrt(0.5), places=6
        )
        self.assertAlmostEqual(
            lambda_closed_form(1, 1.0, 0.0, 1.0), 0.707107, places=6
        )

    def test_matches_quadrature(self):
        exact = lambda_closed_form(4, 4.0, 3.0, 1.0)
        numeric = lambda_quadrature(4, 4.0, 3.0, 1.0)
        self.assertLess(abs(exact - numeric) / exact, 1e-6)

    def test_matches_quadrature_on_random_inputs(self):
        rng = np.random.default_rng(12)
        for _ in range(25):
            k = int(rng.integers(1, 200))
            sum_inv_sigma = k * float(rng.uniform(0.5, 20.0))
            r_k = float(rng.normal(0.0, 2.0))
            tau2 = float(10 ** rng.uniform(-3, 1))
            with self.subTest(k=k, r_k=r_k, tau2=tau2):
                exact = lambda_closed_form(k, sum_inv_sigma, r_k, tau2)
                numeric = lambda_quadrature(k, sum_inv_sigma, r_k, tau2)
                self.assertLess(abs(exact - numeric) / exact, 1e-6)

    def test_positive_and_increasing_in_r(self):
        values = [lambda_closed_form(10, 30.0, r, 1.0) for r in (-3, 0, 3)]
        self.assertTrue(all(v > 0 for v in values))
        self.assertEqual(values, sorted(values))

    def test_overflow_goes_to_infinity(self):
        self.assertTrue(math.isfinite(log_lambda_closed_form(1, 1e8, 1e8, 1)))
        self.assertEqual(lambda_closed_form(1, 1e8, 1e8, 1.0), math.inf)

    def test_compute_lambda_is_capped(self):
        value = compute_lambda(1, 1e8, 1e8, 1.0, "closed_form")
        self.assertEqual(value, LAMBDA_CAP)
        self.assertTrue(math.isfinite(value))

    def test_invalid_inputs(self):
        for args, message in (
            ((0, 1.0, 0.0, 1.0), "k must be at least 1"),
            ((1, 0.0, 0.0, 1.0), "inverse sigmas must be positive"),
            ((1, 1.0, 0.0, 0.0), "tau2 must be positive"),
        ):
            with self.subTest(args=args):
                with self.assertRaisesMessage(ValidationError, message):
                    lambda_closed_form(*args)

    def test_compute_lambda_dispatch(self):
        self.assertEqual(
            compute_lambda(4, 4.0, 3.0, 1.0, "closed_form"),
            lambda_closed_form(4, 4.0, 3.0, 1.0),
        )
        self.assertEqual(
            compute_lambda(4, 4.0, 3.0, 1.0, "quadrature"),
            lambda_quadrature(4, 4.0, 3.0, 1.0),
        )


class TestMixtureDensity(SimpleTestCase):
    def test_integrates_to_one(self):
        for tau2 in (0.01, 1.0, 4.0):
            with self.subTest(tau2=tau2):
                total, _ = integrate.quad(
                    lambda d: truncated_normal_density(d, tau2), 0, np.inf
                )
                self.assertAlmostEqual(total, 1.0, places=8)

    def test_support(self):
        self.assertAlmostEqual(
            truncated_normal_density(1e-12, 1.0), 0.797885, places=6
        )
        np.testing.assert_array_equal(
            truncated_normal_density([-1.0, 0.0], 1.0), [0.0, 0.0]
        )


class TestProbabilityRatio(SimpleTestCase):
    def test_unit_at_zero_effect(self):
        self.assertEqual(probability_ratio(5, 10.0, 1.3, 0.0), 1.0)

    def test_value(self):
        # shift 1: exp(R - 1/2)
        self.assertAlmostEqual(
            probability_ratio(4, 2.0, 2.0, 1.0), math.exp(1.5)
        )
