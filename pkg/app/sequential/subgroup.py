from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from app.core.config import TestConfig
from app.core.exceptions import InsufficientDataError
from app.core.models import as_frame
from app.forest.classification import (
    ClassificationTree,
    fit_classification_tree,
    tree_to_rule_text,
)
from app.nuisance.models import NuisanceModel, estimate_theta, fit_nuisance

logger = logging.getLogger(__name__)

# Seed key that keeps the final refit apart from the per-batch refits
SUBGROUP_FIT_KEY = 2**31 - 1


@dataclass(frozen=True)
class SubgroupReport:
    theta_model: NuisanceModel
    rule_tree: ClassificationTree
    rule_text: str
    fraction_beneficial: float
    covariate_names: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        return {
            "rule_text": self.rule_text,
            "fraction_beneficial": self.fraction_beneficial,
            "rule_tree": self.rule_tree.to_dict(
                names=self.covariate_names or None
            ),
        }


def extract_subgroup(
    history,
    cfg: TestConfig,
    names: Sequence[str] | None = None,
    n_jobs: int | None = 1,
) -> SubgroupReport:
    """Refits theta_hat on all of `history`, labels rows 1{theta_hat > 0} and
    summarises the labels with a shallow classification tree."""
    frame = as_frame(history)
    n_control, n_treated = frame.arm_counts()
    if n_control == 0 or n_treated == 0:
        raise InsufficientDataError(
            "subgroup extraction needs both treated and control rows"
        )
    model = fit_nuisance(frame, cfg, fit_key=SUBGROUP_FIT_KEY, n_jobs=n_jobs)
    labels = (estimate_theta(model, frame.X) > 0).astype(np.int64)
    tree = fit_classification_tree(
        frame.X,
        labels,
        max_depth=cfg.subgroup_max_depth,
        min_leaf=cfg.forest.min_leaf,
    )
    report = SubgroupReport(
        theta_model=model,
        rule_tree=tree,
        rule_text=tree_to_rule_text(tree, names),
        fraction_beneficial=float(labels.mean()),
        covariate_names=tuple(names or ()),
    )
    logger.info(
        f"beneficial subgroup {report.rule_text} covers "
        f"{report.fraction_beneficial:.1%} of {frame.n} rows"
    )
    return report
