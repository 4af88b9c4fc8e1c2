"""Replication runner for the simulation studies.

Every replicate draws its stream and its forest seeds from
(master_seed, replicate index) alone, so a report is identical whatever the
number of workers.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from enum import StrEnum
from typing import Iterable

import numpy as np
from app.baselines.fixed_horizon import (
    fixed_horizon_k,
    fixed_horizon_n,
    run_fixed_horizon,
)
from app.baselines.msprt import (
    MsprtKind,
    msprt_step_bernoulli,
    msprt_step_normal,
    new_msprt_state,
)
from app.core.config import TestConfig
from app.core.exceptions import NumericalError, ValidationError
from app.core.links import LinkFunction
from app.core.models import Decision, Observation, Verdict
from app.lib.parallel import parallel_map
from app.lib.seeding import derive_seed, make_rng
from app.sequential.engine import run_stream, truncated_path

from .models import SimModel, simulated_stream
from .oracle import oracle_delta

logger = logging.getLogger(__name__)

STOP_QUANTILES = (0.1, 0.25, 0.5, 0.75, 0.9)

# Replicate streams and forest seeds use separate key spaces
STREAM_KEY = 0
FOREST_KEY = 1


class Engine(StrEnum):
    SUBTLE = "subtle"
    MSPRT = "msprt"
    FIXED = "fixed"


@dataclass(frozen=True)
class ReplicateRow:
    replicate: int
    seed: int
    decision: str
    rejected: bool
    stop_sample_size: int
    k_stop: int
    max_lambda: float | None = None
    delta_hat: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ReplicationReport:
    model_id: str
    c: float
    n_noise: int
    engine: Engine
    master_seed: int
    config: dict
    rows: tuple[ReplicateRow, ...]
    fixed_k: int | None = None
    extra: dict = field(default_factory=dict)

    @property
    def n_reps(self) -> int:
        return len(self.rows)

    @property
    def rejection_rate(self) -> float:
        return sum(row.rejected for row in self.rows) / self.n_reps

    @property
    def rejection_se(self) -> float:
        rate = self.rejection_rate
        return math.sqrt(rate * (1.0 - rate) / self.n_reps)

    @property
    def stop_sizes(self) -> np.ndarray:
        return np.array([row.stop_sample_size for row in self.rows])

    def stopping_summary(self) -> dict:
        sizes = self.stop_sizes
        quantiles = np.quantile(sizes, STOP_QUANTILES)
        return {
            "mean": float(sizes.mean()),
            "median": float(np.median(sizes)),
            "quantiles": {
                f"{q:g}": float(v) for q, v in zip(STOP_QUANTILES, quantiles)
            },
        }

    def to_dict(self) -> dict:
        return {
            "model": self.model_id,
            "c": self.c,
            "n_noise": self.n_noise,
            "engine": str(self.engine),
            "master_seed": self.master_seed,
            "n_reps": self.n_reps,
            "rejection_rate": self.rejection_rate,
            "rejection_se": self.rejection_se,
            "stop_sample_size": self.stopping_summary(),
            "fixed_k": self.fixed_k,
            "config": self.config,
            **self.extra,
        }


def replicate_config(cfg: TestConfig, master_seed: int, index: int):
    return cfg.with_seed(derive_seed(master_seed, index, FOREST_KEY))


def replicate_stream(
    model: SimModel, cfg: TestConfig, master_seed: int, index: int
):
    rng = make_rng(master_seed, index, STREAM_KEY)
    return simulated_stream(model, rng, chunk=cfg.m)


def paired_arrivals(source: Iterable[Observation]):
    """Pairs consecutive control and treated arrivals in arrival order.

    Yields (n_consumed, (y0, y1)) where n_consumed counts every observation
    read so far, paired or not."""
    waiting = {0: deque(), 1: deque()}
    for n_consumed, o in enumerate(source, start=1):
        waiting[o.a].append(o.y)
        if waiting[0] and waiting[1]:
            yield n_consumed, (waiting[0].popleft(), waiting[1].popleft())


def run_msprt_stream(
    source: Iterable[Observation], cfg: TestConfig
) -> tuple[Verdict, float | None]:
    """mSPRT on paired arrivals, stopped at rejection or once more than M
    observations have been read."""
    kind = (
        MsprtKind.NORMAL
        if cfg.link == LinkFunction.IDENTITY
        else MsprtKind.BERNOULLI
    )
    state = new_msprt_state(kind, cfg.tau2, cfg.alpha)
    max_lambda = None
    n_consumed = 0
    for n_consumed, pair in paired_arrivals(source):
        if kind == MsprtKind.NORMAL:
            state = msprt_step_normal(state, pair, cfg.known_var)
        else:
            state = msprt_step_bernoulli(state, (int(pair[0]), int(pair[1])))
        if state.lambda_ is not None:
            max_lambda = max(max_lambda or 0.0, state.lambda_)
        if state.rejected:
            return Verdict(Decision.REJECT, n_consumed, state.n), max_lambda
        if n_consumed > cfg.failure_time:
            break
    return (
        Verdict(Decision.ACCEPT_AT_FAILURE_TIME, n_consumed, state.n),
        max_lambda,
    )


@dataclass(frozen=True)
class _ReplicateTask:
    model: SimModel
    cfg: TestConfig
    engine: Engine
    master_seed: int
    index: int
    fixed_k: int | None


def _run_replicate(task: _ReplicateTask) -> ReplicateRow:
    cfg = replicate_config(task.cfg, task.master_seed, task.index)
    stream = replicate_stream(task.model, cfg, task.master_seed, task.index)
    max_lambda = delta = None
    if task.engine == Engine.SUBTLE:
        result = run_stream(stream, cfg, n_jobs=1, with_subgroup=False)
        verdict = result.verdict
        max_lambda = result.state.max_lambda
        delta = result.state.delta_hat
    elif task.engine == Engine.MSPRT:
        verdict, max_lambda = run_msprt_stream(stream, cfg)
    else:
        verdict = run_fixed_horizon(stream, cfg, task.fixed_k)
    return ReplicateRow(
        replicate=task.index,
        seed=cfg.seed,
        decision=str(verdict.decision),
        rejected=verdict.rejected,
        stop_sample_size=verdict.stop_sample_size,
        k_stop=verdict.k_stop,
        max_lambda=max_lambda,
        delta_hat=delta,
    )


def run_replications(
    model: SimModel,
    cfg: TestConfig,
    n_reps: int,
    engine: Engine | str = Engine.SUBTLE,
    n_jobs: int | None = None,
    master_seed: int = 0,
    fixed_k: int | None = None,
) -> ReplicationReport:
    """Runs `n_reps` independent replicates of one simulation cell."""
    if n_reps < 1:
        raise ValidationError("n_reps must be at least 1")
    engine = Engine(engine)
    if engine == Engine.FIXED and (fixed_k is None or fixed_k < 1):
        raise ValidationError("the fixed-horizon engine needs fixed_k >= 1")
    logger.info(
        f"model {model.id} c={model.c} noise={model.n_noise}: "
        f"{n_reps} {engine} replicates"
    )
    tasks = [
        _ReplicateTask(model, cfg, engine, master_seed, index, fixed_k)
        for index in range(n_reps)
    ]
    rows = parallel_map(_run_replicate, tasks, n_jobs=n_jobs)
    report = ReplicationReport(
        model_id=str(model.id),
        c=model.c,
        n_noise=model.n_noise,
        engine=engine,
        master_seed=master_seed,
        config=cfg.as_dict(),
        rows=tuple(rows),
        fixed_k=fixed_k if engine == Engine.FIXED else None,
    )
    logger.info(
        f"rejection rate {report.rejection_rate:.3f} "
        f"(se {report.rejection_se:.3f})"
    )
    return report


def _truncated_delta_hat(task: _ReplicateTask) -> float:
    cfg = replicate_config(task.cfg, task.master_seed, task.index)
    stream = replicate_stream(task.model, cfg, task.master_seed, task.index)
    return truncated_path(stream, cfg, task.fixed_k).delta_hat


def sigma_from_deltas(delta_hats, k_prime: int) -> float:
    """sqrt(k' Var(Delta_hat_k')) from replicated estimates."""
    delta_hats = np.asarray(delta_hats, dtype=np.float64)
    if delta_hats.size < 2:
        raise ValidationError("need at least two replicated estimates")
    variance = float(np.var(delta_hats, ddof=1))
    if variance <= 0:
        raise NumericalError(
            "replicated value-difference estimates have zero variance"
        )
    return math.sqrt(k_prime * variance)


def sigma_for_fixed_horizon(
    model: SimModel,
    cfg: TestConfig,
    k_prime: int = 50,
    n_reps: int = 500,
    n_jobs: int | None = None,
    master_seed: int = 0,
) -> float:
    """Long-run per-batch standard deviation of the value-difference
    estimate, from n_reps truncated paths of k_prime batches."""
    if k_prime < 10:
        raise ValidationError("k_prime must be at least 10")
    tasks = [
        _ReplicateTask(model, cfg, Engine.FIXED, master_seed, index, k_prime)
        for index in range(n_reps)
    ]
    deltas = parallel_map(_truncated_delta_hat, tasks, n_jobs=n_jobs)
    sigma = sigma_from_deltas(deltas, k_prime)
    logger.info(f"fixed-horizon sigma {sigma:.4f} from {n_reps} paths")
    return sigma


@dataclass(frozen=True)
class FixedHorizonReference:
    sigma: float
    delta: float
    power: float
    k: int
    n: int

    def as_dict(self) -> dict:
        return asdict(self)


def fixed_horizon_reference(
    model: SimModel,
    cfg: TestConfig,
    power: float,
    k_prime: int = 50,
    n_reps: int = 500,
    n_mc: int = 1_000_000,
    n_jobs: int | None = None,
    master_seed: int = 0,
) -> FixedHorizonReference:
    """Sample size a one-shot test needs to match `power`, with sigma from
    truncated paths and Delta from the generator."""
    sigma = sigma_for_fixed_horizon(
        model, cfg, k_prime, n_reps, n_jobs=n_jobs, master_seed=master_seed
    )
    delta = oracle_delta(model, n_mc, make_rng(master_seed, n_reps, 2))
    k = fixed_horizon_k(sigma, delta, cfg.alpha, power)
    return FixedHorizonReference(
        sigma=sigma,
        delta=delta,
        power=power,
        k=k,
        n=fixed_horizon_n(k, cfg.m, cfg.l),
    )


def matching_power(report: ReplicationReport) -> float:
    """Sequential power clipped into [0.5, 0.999] so the fixed-horizon
    quantile stays finite."""
    return min(max(report.rejection_rate, 0.5), 0.999)


def stopping_histogram(stop_sizes, bins: int = 20) -> list[tuple[float, int]]:
    """(left bin edge, count) pairs of the stopping sample sizes."""
    stop_sizes = np.asarray(stop_sizes)
    if stop_sizes.size == 0:
        raise ValidationError("no stopping times to summarise")
    counts, edges = np.histogram(stop_sizes, bins=bins)
    return [(float(edge), int(count)) for edge, count in zip(edges, counts)]