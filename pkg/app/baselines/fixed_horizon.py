from __future__ import annotations

import logging
import math
from typing import Iterable

from app.core.config import TestConfig
from app.core.exceptions import ValidationError
from app.core.models import Decision, Observation, Verdict
from app.sequential.engine import truncated_path
from scipy.stats import norm

logger = logging.getLogger(__name__)


def z_quantile(alpha: float) -> float:
    """Z_alpha, the (1 - alpha) quantile of the standard normal."""
    return float(norm.ppf(1.0 - alpha))


def fixed_horizon_k(
    sigma: float, delta: float, alpha: float, power: float
) -> int:
    """Batches needed by the one-shot test: ceil(sigma^2 (Z_alpha +
    Z_{1-power})^2 / delta^2)."""
    if sigma <= 0:
        raise ValidationError("sigma must be positive")
    if delta <= 0:
        raise ValidationError(
            "delta must be positive, a zero effect needs an infinite horizon"
        )
    if not (0 < alpha < 1 and 0 < power < 1):
        raise ValidationError("alpha and power must lie in (0, 1)")
    z_sum = z_quantile(alpha) + float(norm.ppf(power))
    return math.ceil(sigma**2 * z_sum**2 / delta**2)


def fixed_horizon_n(k: int, m: int, l: int) -> int:  # noqa: E741
    """Total sample size k m + l of a k-batch fixed-horizon test."""
    return k * m + l


def fixed_horizon_decide(r_k: float, alpha: float) -> bool:
    """Rejects iff R_k > Z_alpha."""
    return r_k > z_quantile(alpha)


def run_fixed_horizon(
    source: Iterable[Observation], cfg: TestConfig, k: int
) -> Verdict:
    """Runs exactly k batches and decides once at the end."""
    state = truncated_path(source, cfg, k)
    decision = (
        Decision.REJECT
        if fixed_horizon_decide(state.r_k, cfg.alpha)
        else Decision.ACCEPT_AT_FAILURE_TIME
    )
    return Verdict(decision, state.n_consumed, k)
