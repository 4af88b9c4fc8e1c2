from unittest import mock

import numpy as np
from app.aipw.contrast import (
    batch_mean_d,
    conditional_sd,
    contrast_d,
    contrast_variance,
    ipw_value,
    summarise_batch,
)
from app.core.exceptions import InsufficientDataError, ValidationError
from app.core.models import Observation, ObservationFrame
from app.nuisance.models import ConstantArmMean, NuisanceModel
from app.simgen.models import SimModel, draw_batch
from app.simgen.oracle import oracle_delta, oracle_nuisance
from django.test import SimpleTestCase

from test.utils import silence_logger, slow

TREATS = NuisanceModel(
    m0=ConstantArmMean(0.4), m1=ConstantArmMean(0.6), p_hat=0.5
)
NEVER_TREATS = NuisanceModel(
    m0=ConstantArmMean(0.6), m1=ConstantArmMean(0.4), p_hat=0.5
)


class TestContrastD(SimpleTestCase):
    def test_treated_responder(self):
        o = Observation(y=1.0, a=1, x=(0.0,))
        self.assertAlmostEqual(contrast_d(o, TREATS), 1.0)

    def test_control_non_responder(self):
        o = Observation(y=0.0, a=0, x=(0.0,))
        self.assertAlmostEqual(contrast_d(o, TREATS), 1.0)

    def test_zero_when_the_rule_treats_nobody(self):
        frame = ObservationFrame.from_arrays(
            [1, 0, 1, 0], [1, 1, 0, 0], np.zeros((4, 1))
        )
        np.testing.assert_array_equal(
            contrast_d(frame, NEVER_TREATS), np.zeros(4)
        )

    def test_empty_block(self):
        self.assertEqual(contrast_d(ObservationFrame.empty(2), TREATS).size, 0)


class TestBatchMeanD(SimpleTestCase):
    def setUp(self):
        self.batch = [
            Observation(y=1.0, a=1, x=(0.0,)),
            Observation(y=0.0, a=0, x=(0.0,)),
        ]

    def test_mean_of_hand_examples(self):
        self.assertAlmostEqual(batch_mean_d(self.batch, TREATS, m=2), 1.0)
        self.assertEqual(batch_mean_d(self.batch, NEVER_TREATS, m=2), 0.0)

    def test_order_does_not_matter(self):
        frame = ObservationFrame.from_arrays(
            [1, 0, 0, 1, 1], [1, 0, 1, 0, 1], np.arange(5.0).reshape(-1, 1)
        )
        shuffled = frame.take(np.array([3, 0, 4, 2, 1]))
        self.assertAlmostEqual(
            batch_mean_d(frame, TREATS), batch_mean_d(shuffled, TREATS)
        )

    def test_wrong_batch_size(self):
        with self.assertRaisesMessage(ValidationError, "expected 3"):
            batch_mean_d(self.batch, TREATS, m=3)


class TestConditionalSd(SimpleTestCase):
    history = ObservationFrame.empty(1)

    def with_contrasts(self, values):
        return mock.patch(
            "app.aipw.contrast.contrast_d", return_value=np.array(values)
        )

    def test_sample_variance_over_batch_size(self):
        with self.with_contrasts([0.0, 2.0]):
            self.assertAlmostEqual(
                conditional_sd(self.history, TREATS, m=20), 0.316228, places=6
            )
        with self.with_contrasts([1.0, 2.0, 3.0]):
            self.assertEqual(conditional_sd(self.history, TREATS, m=1), 1.0)

    @silence_logger("app.aipw.contrast")
    def test_zero_variance_is_floored(self):
        with self.with_contrasts([0.5, 0.5, 0.5]):
            self.assertEqual(
                conditional_sd(self.history, TREATS, 20, sigma_floor=1e-8),
                1e-8,
            )

    def test_too_little_history(self):
        with self.with_contrasts([1.0]):
            with self.assertRaises(InsufficientDataError):
                contrast_variance(self.history, TREATS)

    @silence_logger("app.aipw.contrast")
    def test_batch_summary_flags_the_floor(self):
        batch = [Observation(y=1.0, a=1, x=(0.0,))]
        history = ObservationFrame.from_arrays(
            [0, 1, 0], [0, 0, 0], np.zeros((3, 1))
        )
        summary = summarise_batch(batch, history, NEVER_TREATS, 4, 1, 1e-8)
        self.assertTrue(summary.floored)
        self.assertEqual((summary.k, summary.n_used, summary.d_bar), (4, 1, 0))


class TestIpwValue(SimpleTestCase):
    def setUp(self):
        a = np.array([0, 1, 1, 0])
        self.frame = ObservationFrame.from_arrays(
            np.ones(4), a, a.reshape(-1, 1).astype(float)
        )

    def test_rule_following_the_assignment(self):
        self.assertEqual(ipw_value(self.frame, lambda X: X[:, 0], 0.5), 2.0)

    def test_rule_never_matching(self):
        self.assertEqual(
            ipw_value(self.frame, lambda X: 1 - X[:, 0], 0.5), 0.0
        )

    def test_invalid_inputs(self):
        with self.assertRaisesMessage(ValidationError, "no data"):
            ipw_value(ObservationFrame.empty(1), lambda X: X[:, 0], 0.5)
        with self.assertRaisesMessage(ValidationError, "strictly inside"):
            ipw_value(self.frame, lambda X: X[:, 0], 1.0)


class TestDoublyRobust(SimpleTestCase):
    @slow
    def test_unbiased_at_the_truth(self):
        model = SimModel.create("I", 1.0)
        frame = draw_batch(model, 200_000, np.random.default_rng(7))
        d = contrast_d(frame, oracle_nuisance(model))
        delta = oracle_delta(model, 1_000_000, np.random.default_rng(8))
        se = d.std(ddof=1) / np.sqrt(d.size)
        self.assertLess(abs(d.mean() - delta), 3 * se)

    @slow
    def test_unbiased_with_a_wrong_outcome_model(self):
        model = SimModel.create("I", 1.0)
        frame = draw_batch(model, 200_000, np.random.default_rng(9))
        oracle = oracle_nuisance(model)
        wrong_means = NuisanceModel(
            m0=ConstantArmMean(0.3),
            m1=ConstantArmMean(0.3),
            p_hat=0.5,
            rule=oracle.rule,
        )
        d = contrast_d(frame, wrong_means)
        delta = oracle_delta(model, 1_000_000, np.random.default_rng(10))
        se = d.std(ddof=1) / np.sqrt(d.size)
        self.assertLess(abs(d.mean() - delta), 3 * se)

    @slow
    def test_unbiased_with_a_wrong_propensity(self):
        model = SimModel.create("I", 1.0)
        frame = draw_batch(model, 200_000, np.random.default_rng(11))
        wrong_propensity = oracle_nuisance(model).with_propensity(0.35)
        d = contrast_d(frame, wrong_propensity)
        delta = oracle_delta(model, 1_000_000, np.random.default_rng(12))
        se = d.std(ddof=1) / np.sqrt(d.size)
        self.assertLess(abs(d.mean() - delta), 3 * se)
