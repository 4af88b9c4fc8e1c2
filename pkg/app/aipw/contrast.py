"""Doubly robust contrast between the estimated optimal rule and all-control.

For one observation O = (Y, A, X) and rule d = 1{theta_hat(X) > 0}:

    D = [Y 1(A=d) / p_A - (1(A=d) / p_A - 1) m_d(X)]
        - [Y 1(A=0) / (1-p) - (1(A=0) / (1-p) - 1) m_0(X)]

with p_A = A p + (1 - A)(1 - p). Rows where d = 0 contribute exactly zero.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from app.core.constants import SIGMA_FLOOR
from app.core.exceptions import InsufficientDataError, ValidationError
from app.core.models import Observation, ObservationFrame, as_frame
from app.nuisance.models import NuisanceModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContrastBatchSummary:
    k: int
    d_bar: float
    sigma_hat: float
    n_used: int
    floored: bool = False


def _contrast_values(frame: ObservationFrame, model: NuisanceModel):
    if frame.n == 0:
        return np.empty(0)
    d_hat = model.treatment_rule(frame.X)
    m0 = model.mean0(frame.X)
    m1 = model.mean1(frame.X)
    p = model.p_hat
    y, a = frame.y, frame.a
    m_rule = np.where(d_hat == 1, m1, m0)
    p_a = np.where(a == 1, p, 1.0 - p)
    follows_rule = (a == d_hat).astype(np.float64)
    control = (a == 0).astype(np.float64)
    value_rule = y * follows_rule / p_a - (follows_rule / p_a - 1.0) * m_rule
    value_control = y * control / (1.0 - p) - (
        control / (1.0 - p) - 1.0
    ) * m0
    contrast = value_rule - value_control
    contrast[d_hat == 0] = 0.0
    return contrast


def contrast_d(
    o: Observation | ObservationFrame | Sequence[Observation],
    model: NuisanceModel,
):
    """Contrast D for one observation (float) or for every row of a block."""
    if isinstance(o, Observation):
        frame = ObservationFrame.from_observations([o])
        return float(_contrast_values(frame, model)[0])
    return _contrast_values(as_frame(o), model)


def batch_mean_d(batch, model: NuisanceModel, m: int | None = None) -> float:
    """Mean contrast over a batch; `m` enforces the batch size."""
    frame = as_frame(batch)
    if m is not None and frame.n != m:
        raise ValidationError(f"batch has {frame.n} rows, expected {m}")
    if frame.n == 0:
        raise ValidationError("empty batch")
    return float(np.mean(_contrast_values(frame, model)))


def contrast_variance(history, model: NuisanceModel) -> float:
    """Unbiased sample variance of D over `history`."""
    values = contrast_d(as_frame(history), model)
    if len(values) < 2:
        raise InsufficientDataError(
            "need at least two observations to estimate the contrast variance"
        )
    return float(np.var(values, ddof=1))


def conditional_sd(
    history,
    model: NuisanceModel,
    m: int,
    sigma_floor: float = SIGMA_FLOOR,
) -> float:
    """sigma_hat = max(sqrt(s^2 / m), sigma_floor), s^2 taken over `history`."""
    sigma = float(np.sqrt(contrast_variance(history, model) / m))
    if sigma < sigma_floor:
        logger.warning(
            f"contrast standard deviation {sigma:.3g} floored to {sigma_floor}"
        )
        return sigma_floor
    return sigma


def summarise_batch(
    batch, history, model: NuisanceModel, k: int, m: int, sigma_floor: float
) -> ContrastBatchSummary:
    """D-bar over the new batch and sigma-hat over the data before it."""
    sigma = conditional_sd(history, model, m, sigma_floor)
    return ContrastBatchSummary(
        k=k,
        d_bar=batch_mean_d(batch, model, m),
        sigma_hat=sigma,
        n_used=m,
        floored=sigma <= sigma_floor,
    )


def ipw_value(
    data,
    rule: Callable[[np.ndarray], np.ndarray],
    p_hat: float,
) -> float:
    """Inverse probability weighted value of `rule`:
    mean of Y 1{A = rule(X)} / p_A."""
    frame = as_frame(data)
    if frame.n == 0:
        raise ValidationError("cannot estimate a value from no data")
    if not 0 < p_hat < 1:
        raise ValidationError("propensity must lie strictly inside (0, 1)")
    assigned = np.asarray(rule(frame.X)).astype(np.int64).ravel()
    p_a = np.where(frame.a == 1, p_hat, 1.0 - p_hat)
    weights = (frame.a == assigned) / p_a
    return float(np.mean(frame.y * weights))
