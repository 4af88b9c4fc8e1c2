from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Callable, Protocol

import numpy as np
from app.core.config import TestConfig
from app.core.constants import (
    CLAMP_EPS,
    PROPENSITY_CLIP_HI,
    PROPENSITY_CLIP_LO,
)
from app.core.exceptions import InsufficientDataError
from app.core.links import LinkFunction, apply_link
from app.core.models import ObservationFrame, as_frame
from app.forest.forest import fit_forest
from app.lib.seeding import derive_seed

logger = logging.getLogger(__name__)

CONTROL = 0
TREATED = 1


class ArmMeanModel(Protocol):
    """Anything that predicts E(Y | A=a, X) for a matrix of covariates."""

    def predict(self, X) -> np.ndarray: ...


@dataclass(frozen=True)
class ConstantArmMean:
    """Arm mean that ignores the covariates."""

    value: float

    def predict(self, X) -> np.ndarray:
        return np.full(np.atleast_2d(X).shape[0], self.value)


@dataclass(frozen=True)
class NuisanceModel:
    """Fitted arm means m0, m1 and the scalar propensity estimate p_hat."""

    m0: ArmMeanModel
    m1: ArmMeanModel
    p_hat: float
    link: LinkFunction = LinkFunction.LOGIT
    clamp_eps: float = CLAMP_EPS
    # Fixed treatment rule used by the contrast instead of 1{theta_hat > 0};
    # lets the rule and the outcome means be varied independently
    rule: Callable[[np.ndarray], np.ndarray] | None = None

    def treatment_rule(self, X) -> np.ndarray:
        if self.rule is not None:
            return np.asarray(self.rule(np.atleast_2d(X)), dtype=np.int64)
        return optimal_rule(self, np.atleast_2d(X))

    def mean0(self, X) -> np.ndarray:
        return np.asarray(self.m0.predict(np.atleast_2d(X)), dtype=np.float64)

    def mean1(self, X) -> np.ndarray:
        return np.asarray(self.m1.predict(np.atleast_2d(X)), dtype=np.float64)

    def with_propensity(self, p_hat: float) -> NuisanceModel:
        return replace(self, p_hat=p_hat)


def estimate_propensity(a) -> float:
    """Share of treated rows, clipped into [0.01, 0.99]."""
    if isinstance(a, ObservationFrame):
        a = a.a
    a = np.asarray(a)
    if a.size == 0:
        raise InsufficientDataError("cannot estimate a propensity from no rows")
    share = float(a.mean())
    clipped = min(max(share, PROPENSITY_CLIP_LO), PROPENSITY_CLIP_HI)
    if clipped != share:
        logger.warning(f"propensity {share:.4f} clipped to {clipped}")
    return clipped


def fit_nuisance(
    history, cfg: TestConfig, fit_key: int = 0, n_jobs: int | None = 1
) -> NuisanceModel:
    """Fits m0 on control rows and m1 on treated rows of `history`.

    `fit_key` (the batch index in the sequential engine) is mixed into the
    forest seeds so refits see fresh randomness while staying reproducible.
    """
    history = as_frame(history)
    n_control, n_treated = history.arm_counts()
    needed = cfg.forest.min_leaf
    if min(n_control, n_treated) < max(needed, 1):
        raise InsufficientDataError(
            f"need at least {needed} rows in each arm to fit the outcome "
            f"models, got {n_control} control and {n_treated} treated; "
            "use a larger initial batch"
        )
    models = {}
    for arm in (CONTROL, TREATED):
        rows = history.arm(arm)
        params = replace(
            cfg.forest, seed=derive_seed(cfg.forest.seed, fit_key, arm)
        )
        models[arm] = fit_forest(rows.X, rows.y, params, n_jobs=n_jobs)
    return NuisanceModel(
        m0=models[CONTROL],
        m1=models[TREATED],
        p_hat=estimate_propensity(history.a),
        link=cfg.link,
        clamp_eps=cfg.clamp_eps,
    )


def estimate_theta(model: NuisanceModel, x):
    """theta_hat(x) = g(m1(x)) - g(m0(x)) on the link scale.

    Returns a float for a single covariate vector and an array otherwise."""
    g1 = apply_link(model.link, model.mean1(x), model.clamp_eps)
    g0 = apply_link(model.link, model.mean0(x), model.clamp_eps)
    theta = np.asarray(g1) - np.asarray(g0)
    return float(theta[0]) if np.ndim(x) == 1 else theta


def rule_from_theta(theta):
    """1{theta > 0}; a zero effect does not earn treatment."""
    return (np.asarray(theta) > 0).astype(np.int64)


def optimal_rule(model: NuisanceModel, x):
    """Estimated optimal treatment rule 1{theta_hat(x) > 0}."""
    rule = rule_from_theta(estimate_theta(model, x))
    return int(rule) if np.ndim(x) == 1 else rule
