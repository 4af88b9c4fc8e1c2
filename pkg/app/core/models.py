from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import StrEnum
from typing import Iterable, Iterator, Sequence

import numpy as np

from .constants import COVARIATE_PREFIX, OUTCOME_COLUMN, TREATMENT_COLUMN
from .exceptions import ValidationError
from .links import LinkFunction

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Observation:
    """One unit: outcome y, treatment indicator a and covariates x."""

    y: float
    a: int
    x: tuple[float, ...]

    @property
    def p(self) -> int:
        return len(self.x)


@dataclass(frozen=True)
class ObservationFrame:
    """Column-wise block of observations.

    The sequential engine keeps its history in this form so that forests and
    contrasts work on arrays rather than on individual Observation objects.
    """

    y: np.ndarray
    a: np.ndarray
    X: np.ndarray

    def __post_init__(self):
        if self.X.ndim != 2:
            raise ValidationError("covariates must be a 2-d array")
        if not (len(self.y) == len(self.a) == self.X.shape[0]):
            raise ValidationError("y, a and X must have the same length")

    @classmethod
    def from_arrays(cls, y, a, X) -> ObservationFrame:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        return cls(
            y=np.asarray(y, dtype=np.float64),
            a=np.asarray(a, dtype=np.int64),
            X=X,
        )

    @classmethod
    def from_observations(
        cls, observations: Iterable[Observation], p: int | None = None
    ) -> ObservationFrame:
        observations = list(observations)
        if not observations:
            width = p or 0
            return cls.empty(width)
        widths = {o.p for o in observations}
        if len(widths) != 1:
            raise ValidationError("observations have differing dimensions")
        return cls.from_arrays(
            [o.y for o in observations],
            [o.a for o in observations],
            [o.x for o in observations],
        )

    @classmethod
    def empty(cls, p: int) -> ObservationFrame:
        return cls.from_arrays([], [], np.empty((0, p)))

    @property
    def n(self) -> int:
        return len(self.y)

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def __iter__(self) -> Iterator[Observation]:
        for i in range(self.n):
            yield self.row(i)

    def row(self, i: int) -> Observation:
        return Observation(
            y=float(self.y[i]), a=int(self.a[i]), x=tuple(self.X[i].tolist())
        )

    def arm(self, a: int) -> ObservationFrame:
        mask = self.a == a
        return ObservationFrame(self.y[mask], self.a[mask], self.X[mask])

    def take(self, index) -> ObservationFrame:
        return ObservationFrame(self.y[index], self.a[index], self.X[index])

    def concat(self, other: ObservationFrame) -> ObservationFrame:
        if self.n and other.n and self.p != other.p:
            raise ValidationError(
                f"cannot append {other.p} covariates to a stream of {self.p}"
            )
        return ObservationFrame(
            np.concatenate([self.y, other.y]),
            np.concatenate([self.a, other.a]),
            np.vstack([self.X, other.X]) if self.n else other.X,
        )

    def with_outcomes(self, y) -> ObservationFrame:
        return ObservationFrame(np.asarray(y, np.float64), self.a, self.X)

    def with_treatments(self, a) -> ObservationFrame:
        return ObservationFrame(self.y, np.asarray(a, np.int64), self.X)

    def arm_counts(self) -> tuple[int, int]:
        treated = int(self.a.sum())
        return self.n - treated, treated


def as_frame(
    data: ObservationFrame | Sequence[Observation],
) -> ObservationFrame:
    if isinstance(data, ObservationFrame):
        return data
    return ObservationFrame.from_observations(data)


@dataclass(frozen=True)
class StreamSchema:
    """Declared shape of a stream: every observation is checked against it."""

    p: int
    link: LinkFunction
    covariate_names: tuple[str, ...] = field(default=())

    @property
    def columns(self) -> tuple[str, ...]:
        return (OUTCOME_COLUMN, TREATMENT_COLUMN) + self.covariate_names

    def check(self, observation: Observation, row: int | None = None):
        if observation.p != self.p:
            raise ValidationError(
                f"expected {self.p} covariates, got {observation.p}", row=row
            )
        self.check_frame(
            ObservationFrame.from_observations([observation]), first_row=row
        )

    def check_frame(self, frame: ObservationFrame, first_row: int | None = 1):
        """Validates a block, reporting the first offending row."""
        if frame.n and frame.p != self.p:
            raise ValidationError(
                f"expected {self.p} covariates, got {frame.p}", row=first_row
            )
        bad = ~np.isin(frame.a, (0, 1))
        bad |= ~np.isfinite(frame.y)
        bad |= ~np.isfinite(frame.X).all(axis=1)
        if self.link == LinkFunction.LOGIT:
            bad |= ~np.isin(frame.y, (0.0, 1.0))
        if bad.any():
            offset = int(np.argmax(bad))
            row = None if first_row is None else first_row + offset
            raise ValidationError(
                self._describe(frame.row(offset)), row=row
            )

    def _describe(self, observation: Observation) -> str:
        if observation.a not in (0, 1):
            return f"treatment indicator must be 0 or 1, got {observation.a}"
        if not np.isfinite(observation.y):
            return "outcome is not finite"
        if not np.all(np.isfinite(observation.x)):
            return "covariates are not finite"
        return f"outcome must be 0 or 1 for the logit link, got {observation.y}"


def validate_stream_header(
    p: int, link: LinkFunction, names: Sequence[str] | None = None
) -> StreamSchema:
    """Builds the schema for a stream of `p` covariates.

    `names` are the covariate column names when they come from a file header;
    they default to x1..xp."""
    if p < 1:
        raise ValidationError("a stream needs at least one covariate")
    if names is None:
        names = [f"{COVARIATE_PREFIX}{j + 1}" for j in range(p)]
    names = tuple(names)
    if len(names) != p:
        raise ValidationError(
            f"header declares {len(names)} covariates, expected {p}"
        )
    header = (OUTCOME_COLUMN, TREATMENT_COLUMN) + names
    duplicates = sorted({name for name in header if header.count(name) > 1})
    if duplicates:
        raise ValidationError(
            f"duplicate header fields: {', '.join(duplicates)}"
        )
    return StreamSchema(p=p, link=LinkFunction(link), covariate_names=names)


class Decision(StrEnum):
    REJECT = "reject"
    ACCEPT_AT_FAILURE_TIME = "accept_at_failure_time"
    RUNNING = "running"


@dataclass(frozen=True)
class Verdict:
    decision: Decision = Decision.RUNNING
    stop_sample_size: int = 0
    k_stop: int = 0
    stream_exhausted: bool = False

    @property
    def is_running(self) -> bool:
        return self.decision == Decision.RUNNING

    @property
    def rejected(self) -> bool:
        return self.decision == Decision.REJECT
