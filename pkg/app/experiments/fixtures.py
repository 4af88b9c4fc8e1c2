"""Synthetic clickstream standing in for a two-article click log.

Four covariates, a binary click outcome around a 4% baseline rate and a
planted beneficial subgroup {x3 < 0.7} or {x1 >= 0}, where the treatment
raises the click log-odds by 0.5; elsewhere it lowers them by 0.3.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import StrEnum
from pathlib import Path

import numpy as np
from app.core.models import ObservationFrame
from app.lib.seeding import make_rng
from scipy.special import expit, logit

from .io import write_stream_csv

logger = logging.getLogger(__name__)

FIXTURE_SEED = 20240
COVARIATE_NAMES = ("x1", "x2", "x3", "x4")
BASELINE_CTR = 0.04
EFFECT_INSIDE = 0.5
EFFECT_OUTSIDE = -0.3


class FixtureKind(StrEnum):
    PLANTED = "planted"
    NULL = "null"
    SINGLE_ARM = "single_arm"


def in_planted_subgroup(X: np.ndarray) -> np.ndarray:
    X = np.atleast_2d(X)
    return (X[:, 2] < 0.7) | (X[:, 0] >= 0)


def clickstream_theta(X: np.ndarray, kind: FixtureKind) -> np.ndarray:
    if kind != FixtureKind.PLANTED:
        return np.zeros(np.atleast_2d(X).shape[0])
    return np.where(in_planted_subgroup(X), EFFECT_INSIDE, EFFECT_OUTSIDE)


def clickstream_frame(
    n: int, kind: FixtureKind | str, rng: np.random.Generator
) -> ObservationFrame:
    kind = FixtureKind(kind)
    X = np.column_stack(
        [
            rng.standard_normal(n),  # x1: standardised activity score
            rng.uniform(0.0, 1.0, n),  # x2
            rng.uniform(0.0, 1.4, n),  # x3
            rng.binomial(1, 0.5, n).astype(np.float64),  # x4: device flag
        ]
    )
    mu = logit(BASELINE_CTR) + 0.2 * (X[:, 1] - 0.5) - 0.1 * X[:, 3]
    if kind == FixtureKind.SINGLE_ARM:
        a = np.zeros(n, dtype=np.int64)
    else:
        a = rng.binomial(1, 0.5, n)
    clicks = rng.binomial(1, expit(mu + clickstream_theta(X, kind) * a))
    return ObservationFrame.from_arrays(clicks, a, X)


@dataclass(frozen=True)
class FixtureFiles:
    train: Path
    test: Path


def write_clickstream_fixture(
    out_dir: str | Path,
    kind: FixtureKind | str = FixtureKind.PLANTED,
    n_train: int = 30000,
    n_test: int = 20000,
    seed: int = FIXTURE_SEED,
) -> FixtureFiles:
    """Writes `<kind>_train.csv` and `<kind>_test.csv` under `out_dir`."""
    kind = FixtureKind(kind)
    out_dir = Path(out_dir)
    files = FixtureFiles(
        train=write_stream_csv(
            out_dir / f"{kind}_train.csv",
            clickstream_frame(n_train, kind, make_rng(seed, 0)),
            COVARIATE_NAMES,
        ),
        test=write_stream_csv(
            out_dir / f"{kind}_test.csv",
            clickstream_frame(n_test, kind, make_rng(seed, 1)),
            COVARIATE_NAMES,
        ),
    )
    logger.info(f"wrote {kind} fixture to {out_dir}")
    return files
