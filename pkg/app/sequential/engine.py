from __future__ import annotations

import itertools
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Iterable, Iterator

from app.aipw.contrast import summarise_batch
from app.core.config import SigmaPolicy, TestConfig
from app.core.exceptions import (
    InsufficientDataError,
    TerminatedTestError,
    ValidationError,
)
from app.core.models import (
    Decision,
    Observation,
    ObservationFrame,
    StreamSchema,
    Verdict,
    as_frame,
)
from app.nuisance.models import fit_nuisance

from .statistics import compute_lambda, delta_hat, r_statistic
from .subgroup import SubgroupReport, extract_subgroup

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class BatchLogRow:
    k: int
    n_consumed: int
    d_bar: float
    sigma_hat: float
    r_k: float
    lambda_k: float
    delta_hat: float
    verdict: str
    skipped: bool = False

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class TestState:
    """Running state of the sequential test.

    `k` counts batches that contributed to the statistic; `n_consumed`
    counts every observation taken, including the initial batch.
    """

    __test__ = False  # not a pytest test class

    k: int
    n_consumed: int
    sum_inv_sigma: float
    sum_weighted_d: float
    r_k: float
    lambda_k: float
    history: ObservationFrame
    verdict: Verdict = field(default_factory=Verdict)
    per_batch_log: tuple[BatchLogRow, ...] = ()
    max_lambda: float = 0.0

    @property
    def delta_hat(self) -> float:
        if self.sum_inv_sigma <= 0:
            return 0.0
        return delta_hat(self.sum_weighted_d, self.sum_inv_sigma)

    @property
    def is_running(self) -> bool:
        return self.verdict.is_running


def init_test(
    cfg: TestConfig, initial_batch, schema: StreamSchema | None = None
) -> TestState:
    """State after the initial batch C_0: k = 0, Lambda = 0."""
    frame = as_frame(initial_batch)
    if frame.n != cfg.l:
        raise ValidationError(
            f"initial batch has {frame.n} rows, expected l={cfg.l}"
        )
    if schema is not None:
        schema.check_frame(frame)
    n_control, n_treated = frame.arm_counts()
    if n_control == 0 or n_treated == 0:
        raise InsufficientDataError(
            "initial batch must contain both treated and control rows"
        )
    return TestState(
        k=0,
        n_consumed=frame.n,
        sum_inv_sigma=0.0,
        sum_weighted_d=0.0,
        r_k=0.0,
        lambda_k=0.0,
        history=frame,
    )


def advance(
    state: TestState, batch, cfg: TestConfig, n_jobs: int | None = 1
) -> TestState:
    """Folds one batch into the statistic without deciding anything.

    Nuisances are refit on the history before the batch; sigma_hat is taken
    over that same history and D-bar over the new batch. A batch whose
    sigma_hat falls to the floor counts toward k but adds nothing to either
    sum; Lambda stays 0 until some batch has positive variance. Under
    SigmaPolicy.SKIP the batch does not count toward k either."""
    frame = as_frame(batch)
    if frame.n != cfg.m:
        raise ValidationError(f"batch has {frame.n} rows, expected m={cfg.m}")
    batch_index = len(state.per_batch_log) + 1
    model = fit_nuisance(state.history, cfg, fit_key=batch_index, n_jobs=n_jobs)
    summary = summarise_batch(
        frame, state.history, model, batch_index, cfg.m, cfg.sigma_floor
    )
    skipped = summary.floored and cfg.sigma_policy == SigmaPolicy.SKIP
    k = state.k
    sum_inv_sigma = state.sum_inv_sigma
    sum_weighted_d = state.sum_weighted_d
    r_k, lambda_k = state.r_k, state.lambda_k
    if skipped:
        logger.warning(f"batch {batch_index} skipped: zero contrast variance")
    else:
        k += 1
        # a floored batch counts toward k with zero weight
        if not summary.floored:
            sum_inv_sigma += 1.0 / summary.sigma_hat
            sum_weighted_d += summary.d_bar / summary.sigma_hat
        r_k = r_statistic(k, sum_weighted_d)
        if sum_inv_sigma > 0:
            lambda_k = compute_lambda(
                k, sum_inv_sigma, r_k, cfg.tau2, cfg.lambda_method
            )
    n_consumed = state.n_consumed + frame.n
    row = BatchLogRow(
        k=k,
        n_consumed=n_consumed,
        d_bar=summary.d_bar,
        sigma_hat=summary.sigma_hat,
        r_k=r_k,
        lambda_k=lambda_k,
        delta_hat=(
            delta_hat(sum_weighted_d, sum_inv_sigma)
            if sum_inv_sigma > 0
            else 0.0
        ),
        verdict=str(Decision.RUNNING),
        skipped=skipped,
    )
    return replace(
        state,
        k=k,
        n_consumed=n_consumed,
        sum_inv_sigma=sum_inv_sigma,
        sum_weighted_d=sum_weighted_d,
        r_k=r_k,
        lambda_k=lambda_k,
        history=state.history.concat(frame),
        per_batch_log=state.per_batch_log + (row,),
        max_lambda=max(state.max_lambda, lambda_k),
    )


def decide(state: TestState, cfg: TestConfig) -> Verdict:
    """Reject when Lambda_k > 1/alpha, accept once more than M samples
    have been consumed, otherwise keep running."""
    batches = len(state.per_batch_log)
    if state.lambda_k > cfg.threshold:
        return Verdict(Decision.REJECT, state.n_consumed, batches)
    if state.n_consumed > cfg.failure_time:
        return Verdict(
            Decision.ACCEPT_AT_FAILURE_TIME, state.n_consumed, batches
        )
    return Verdict(Decision.RUNNING, state.n_consumed, batches)


def step_batch(
    state: TestState, batch, cfg: TestConfig, n_jobs: int | None = 1
) -> TestState:
    """One pass of the testing loop: refit, update R_k and Lambda_k, decide."""
    if not state.is_running:
        raise TerminatedTestError(
            f"test already finished with {state.verdict.decision}"
        )
    state = advance(state, batch, cfg, n_jobs=n_jobs)
    verdict = decide(state, cfg)
    row = replace(state.per_batch_log[-1], verdict=str(verdict.decision))
    logger.debug(
        f"batch {len(state.per_batch_log)}: n={state.n_consumed} "
        f"R={state.r_k:.4f} Lambda={state.lambda_k:.4g}"
    )
    return replace(
        state, verdict=verdict, per_batch_log=state.per_batch_log[:-1] + (row,)
    )


@dataclass(frozen=True)
class StreamResult:
    verdict: Verdict
    per_batch_log: tuple[BatchLogRow, ...]
    subgroup: SubgroupReport | None
    state: TestState
    discarded_rows: int = 0

    @property
    def stream_exhausted(self) -> bool:
        return self.verdict.stream_exhausted


def _batches(
    rows: Iterator[Observation], size: int
) -> Iterator[list[Observation]]:
    while True:
        batch = list(itertools.islice(rows, size))
        if not batch:
            return
        yield batch


def run_stream(
    source: Iterable[Observation] | ObservationFrame,
    cfg: TestConfig,
    schema: StreamSchema | None = None,
    n_jobs: int | None = 1,
    with_subgroup: bool = True,
) -> StreamResult:
    """Runs the test over a stream until it decides or the stream ends.

    A trailing batch shorter than m is discarded. Running out of data before
    a decision is reported as acceptance with `stream_exhausted` set."""
    rows = iter(source)
    initial = list(itertools.islice(rows, cfg.l))
    if len(initial) < cfg.l:
        raise InsufficientDataError(
            f"stream ended after {len(initial)} rows, the initial batch "
            f"needs l={cfg.l}"
        )
    state = init_test(cfg, initial, schema)
    discarded = 0
    for batch in _batches(rows, cfg.m):
        if len(batch) < cfg.m:
            discarded = len(batch)
            logger.warning(
                f"discarding trailing partial batch of {discarded} rows"
            )
            break
        frame = ObservationFrame.from_observations(batch)
        if schema is not None:
            schema.check_frame(frame, first_row=state.n_consumed + 1)
        state = step_batch(state, frame, cfg, n_jobs=n_jobs)
        if not state.is_running:
            break
    verdict = state.verdict
    if verdict.is_running:
        logger.warning(
            f"stream exhausted after {state.n_consumed} rows without a decision"
        )
        verdict = Verdict(
            Decision.ACCEPT_AT_FAILURE_TIME,
            state.n_consumed,
            len(state.per_batch_log),
            stream_exhausted=True,
        )
        state = replace(state, verdict=verdict)
    logger.info(
        f"verdict {verdict.decision} after {verdict.stop_sample_size} samples"
    )
    subgroup = None
    if verdict.rejected and with_subgroup:
        names = schema.covariate_names if schema is not None else None
        subgroup = extract_subgroup(
            state.history, cfg, names=names, n_jobs=n_jobs
        )
    return StreamResult(
        verdict=verdict,
        per_batch_log=state.per_batch_log,
        subgroup=subgroup,
        state=state,
        discarded_rows=discarded,
    )


def truncated_path(
    source: Iterable[Observation], cfg: TestConfig, n_batches: int
) -> TestState:
    """Advances exactly `n_batches` batches, ignoring the stopping rule."""
    rows = iter(source)
    state = init_test(cfg, list(itertools.islice(rows, cfg.l)))
    for batch in itertools.islice(_batches(rows, cfg.m), n_batches):
        if len(batch) < cfg.m:
            break
        state = advance(state, batch, cfg)
    if len(state.per_batch_log) < n_batches:
        raise InsufficientDataError(
            f"stream ended after {len(state.per_batch_log)} of "
            f"{n_batches} batches"
        )
    return state


def is_finite_log(rows: Iterable[BatchLogRow]) -> bool:
    """True when every numeric column of the batch log is finite."""
    return all(
        math.isfinite(v)
        for row in rows
        for v in (
            row.d_bar,
            row.sigma_hat,
            row.r_k,
            row.lambda_k,
            row.delta_hat,
        )
    )
