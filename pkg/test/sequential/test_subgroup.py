from unittest import mock

import numpy as np
from app.core.exceptions import InsufficientDataError
from app.forest.classification import EMPTY_RULE_TEXT, EVERYONE_RULE_TEXT
from app.nuisance.models import ConstantArmMean, NuisanceModel
from app.sequential.subgroup import extract_subgroup
from app.simgen.models import SimModel, draw_batch
from django.test import SimpleTestCase

from test.utils import slow, small_config, two_arm_frame


def patched_fit(m0, m1):
    model = NuisanceModel(
        m0=ConstantArmMean(m0), m1=ConstantArmMean(m1), p_hat=0.5
    )
    return mock.patch(
        "app.sequential.subgroup.fit_nuisance", return_value=model
    )


class TestExtractSubgroup(SimpleTestCase):
    def test_no_beneficial_rows(self):
        with patched_fit(0.6, 0.4):
            report = extract_subgroup(two_arm_frame(), small_config())
        self.assertEqual(report.fraction_beneficial, 0.0)
        self.assertEqual(report.rule_text, EMPTY_RULE_TEXT)

    def test_everyone_benefits(self):
        with patched_fit(0.4, 0.6):
            report = extract_subgroup(two_arm_frame(), small_config())
        self.assertEqual(report.fraction_beneficial, 1.0)
        self.assertEqual(report.rule_text, EVERYONE_RULE_TEXT)

    def test_report_fields(self):
        cfg = small_config(subgroup_max_depth=2)
        report = extract_subgroup(
            two_arm_frame(n=400, effect=0.5), cfg, names=["age", "visits"]
        )
        self.assertLessEqual(report.rule_tree.depth, 2)
        self.assertTrue(0.0 <= report.fraction_beneficial <= 1.0)
        self.assertEqual(report.covariate_names, ("age", "visits"))
        data = report.as_dict()
        self.assertEqual(
            sorted(data), ["fraction_beneficial", "rule_text", "rule_tree"]
        )
        self.assertNotIn("X1", report.rule_text)

    def test_single_arm_history(self):
        frame = two_arm_frame().with_treatments(np.ones(200))
        with self.assertRaisesMessage(
            InsufficientDataError, "both treated and control"
        ):
            extract_subgroup(frame, small_config())

    @slow
    def test_recovers_the_generating_region(self):
        model = SimModel.create("I", 1.0)
        history = draw_batch(model, 2300, np.random.default_rng(21))
        cfg = small_config(forest={"n_trees": 100})
        report = extract_subgroup(history, cfg)
        grid = model.draw_covariates(2000, np.random.default_rng(22))
        agreement = np.mean(
            report.rule_tree.predict(grid) == model.region(grid)
        )
        self.assertGreaterEqual(agreement, 0.7)
