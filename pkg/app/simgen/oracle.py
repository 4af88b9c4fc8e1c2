from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from app.core.exceptions import ValidationError
from app.nuisance.models import NuisanceModel
from scipy.special import expit

from .models import SimModel

logger = logging.getLogger(__name__)

MIN_ORACLE_DRAWS = 100_000


def oracle_delta_draws(
    model: SimModel, n_mc: int, rng: np.random.Generator
) -> np.ndarray:
    """Per-unit value difference g^-1(mu + theta 1{theta > 0}) - g^-1(mu)."""
    X = model.draw_covariates(n_mc, rng)
    mu = model.mu(X)
    theta = model.theta(X)
    return expit(mu + theta * (theta > 0)) - expit(mu)


def oracle_delta(
    model: SimModel, n_mc: int, rng: np.random.Generator
) -> float:
    """Monte-Carlo value difference between the true optimal rule and
    treating nobody."""
    if n_mc < MIN_ORACLE_DRAWS:
        raise ValidationError(
            f"n_mc must be at least {MIN_ORACLE_DRAWS}, got {n_mc}"
        )
    draws = oracle_delta_draws(model, n_mc, rng)
    delta = float(draws.mean())
    logger.debug(
        f"oracle delta for model {model.id} c={model.c}: {delta:.6f} "
        f"(se {draws.std(ddof=1) / np.sqrt(n_mc):.2g})"
    )
    return delta


@dataclass(frozen=True)
class OracleArmMean:
    """True E(Y | A=arm, X) of a simulation model."""

    model: SimModel
    arm: int

    def predict(self, X) -> np.ndarray:
        mean0, mean1 = self.model.counterfactual_means(np.atleast_2d(X))
        return mean1 if self.arm == 1 else mean0


def oracle_rule(model: SimModel):
    def rule(X):
        return (model.theta(X) > 0).astype(np.int64)

    return rule


def oracle_nuisance(model: SimModel) -> NuisanceModel:
    """Nuisances at the truth: exact arm means, p = 0.5 and the true rule."""
    return NuisanceModel(
        m0=OracleArmMean(model, 0),
        m1=OracleArmMean(model, 1),
        p_hat=model.propensity,
        link=model.link,
        rule=oracle_rule(model),
    )
