"""Monte-Carlo checks of the statistic's large-sample behaviour under the null.

Both checks use true nuisances from a simulation model and the model's
interaction region as a probe rule. With c = 0 every rule has the same value
as treating nobody, so the contrast has mean zero but, unlike under the
all-control rule, a positive variance.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from app.aipw.contrast import contrast_d
from app.core.exceptions import ValidationError
from app.lib.seeding import make_rng
from app.simgen.models import SimModel, draw_batch
from app.simgen.oracle import oracle_nuisance

from .statistics import probability_ratio

logger = logging.getLogger(__name__)


def _null_contrast_model(model: SimModel):
    if model.c != 0:
        raise ValidationError("null checks need a model with c = 0")
    return replace(oracle_nuisance(model), rule=model.region)


def oracle_r_path(
    model: SimModel, k: int, m: int, l: int, rng  # noqa: E741
) -> float:
    """R_k of one simulated path with true nuisances and the probe rule.

    sigma_hat_j is taken over the rows before batch j as in the live test."""
    nuisance = _null_contrast_model(model)
    values = contrast_d(draw_batch(model, l + k * m, rng), nuisance)
    total = 0.0
    for j in range(k):
        start = l + j * m
        sigma = math.sqrt(np.var(values[:start], ddof=1) / m)
        total += values[start : start + m].mean() / sigma
    return total / math.sqrt(k)


def oracle_r_statistics(
    model: SimModel,
    k: int = 50,
    m: int = 20,
    l: int = 300,  # noqa: E741
    n_reps: int = 2000,
    master_seed: int = 0,
) -> np.ndarray:
    """Replicated R_k values; approximately N(0, 1) under the null."""
    if k < 1 or n_reps < 1:
        raise ValidationError("k and n_reps must be positive")
    return np.array(
        [
            oracle_r_path(model, k, m, l, make_rng(master_seed, index))
            for index in range(n_reps)
        ]
    )


@dataclass(frozen=True)
class MartingaleCheck:
    k: int
    delta: float
    lambda_k: float
    mean_next: float

    @property
    def relative_error(self) -> float:
        return abs(self.mean_next - self.lambda_k) / self.lambda_k


def martingale_check(
    model: SimModel,
    k: int = 10,
    m: int = 20,
    delta_scale: float = 0.1,
    n_reps: int = 10_000,
    n_sigma: int = 200_000,
    master_seed: int = 0,
) -> MartingaleCheck:
    """Compares lambda_k with the Monte-Carlo mean of lambda_{k+1} given the
    first k batches, at the fixed alternative Delta = delta_scale / sqrt(k).

    sigma is the known per-batch standard deviation of D-bar, computed once
    from `n_sigma` draws."""
    nuisance = _null_contrast_model(model)
    sigma_rows = contrast_d(
        draw_batch(model, n_sigma, make_rng(master_seed, 0)), nuisance
    )
    sigma = float(np.std(sigma_rows, ddof=1) / math.sqrt(m))
    delta = delta_scale / math.sqrt(k)

    path = contrast_d(
        draw_batch(model, k * m, make_rng(master_seed, 1)), nuisance
    )
    weighted = path.reshape(k, m).mean(axis=1).sum() / sigma
    lambda_k = probability_ratio(
        k, k / sigma, weighted / math.sqrt(k), delta
    )

    next_rows = contrast_d(
        draw_batch(model, n_reps * m, make_rng(master_seed, 2)), nuisance
    )
    next_values = np.empty(n_reps)
    for i, d_bar in enumerate(next_rows.reshape(n_reps, m).mean(axis=1)):
        r_next = (weighted + d_bar / sigma) / math.sqrt(k + 1)
        next_values[i] = probability_ratio(
            k + 1, (k + 1) / sigma, r_next, delta
        )
    check = MartingaleCheck(
        k=k,
        delta=delta,
        lambda_k=lambda_k,
        mean_next=float(next_values.mean()),
    )
    logger.info(
        f"lambda_{k} = {check.lambda_k:.5f}, mean lambda_{k + 1} = "
        f"{check.mean_next:.5f}"
    )
    return check
