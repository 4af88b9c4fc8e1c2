"""Generative models for the simulation studies.

All models use the logit link and randomise treatment with probability 0.5.
Models I-IV draw from five base covariates

    X1 ~ Ber(0.5), X2 ~ U[-1, 1], X3, X4, X5 ~ N(0, 1)

and combine one of two baseline effects with one of two interactions:

    mu1 = -2 - X1 + X3^2              theta1 = c 1{X1 + 2 X3 > 0}
    mu2 = -1.3 + X1 + 0.5 X2 - X3^2   theta2 = c 1{X2 > 0 or X5 < -0.5}

    I: (X1, X3), mu1, theta1     II: X1..X5, mu2, theta2
    III: X1..X5, mu1, theta2     IV: X1..X5, mu2, theta1

Model V has 20 covariates of mixed type with
mu = -0.8 + X18 + 0.5 X12 - X3^2 and theta = c 1{X14 > -0.1 and X20 = 1}.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import StrEnum
from typing import Callable

import numpy as np
from app.core.exceptions import ValidationError
from app.core.links import LinkFunction
from app.core.models import ObservationFrame
from scipy.special import expit

logger = logging.getLogger(__name__)

# Intensities used in the simulation tables; any real c is accepted
C_GRID = (-1.0, 0.0, 0.6, 0.8, 1.0)

PROPENSITY = 0.5


class SimModelId(StrEnum):
    I = "I"  # noqa: E741
    II = "II"
    III = "III"
    IV = "IV"
    V = "V"


Covariates = dict[str, np.ndarray]


def _five_covariates(n: int, rng: np.random.Generator) -> Covariates:
    return {
        "X1": rng.binomial(1, 0.5, n).astype(np.float64),
        "X2": rng.uniform(-1.0, 1.0, n),
        "X3": rng.standard_normal(n),
        "X4": rng.standard_normal(n),
        "X5": rng.standard_normal(n),
    }


def _twenty_covariates(n: int, rng: np.random.Generator) -> Covariates:
    columns = {}
    for r in range(1, 6):
        columns[f"X{r}"] = rng.normal(0.2 * r - 0.6, 1.0, n)
    for r in range(6, 11):
        # second parameter is a variance
        columns[f"X{r}"] = rng.normal(0.2 * r - 1.6, np.sqrt(2.0), n)
    for r in range(11, 14):
        columns[f"X{r}"] = rng.uniform(-0.5 * r + 5, 0.5 * r - 5, n)
    columns["X14"] = rng.uniform(-0.5, 1.5, n)
    columns["X15"] = rng.uniform(-1.5, 0.5, n)
    for r in range(16, 21):
        columns[f"X{r}"] = rng.binomial(1, model_v_bernoulli_p(r), n).astype(
            np.float64
        )
    return columns


def model_v_bernoulli_p(r: int) -> float:
    """Success probability 0.2 r - 3.1 of binary covariate X_r, r = 16..20."""
    return round(0.2 * r - 3.1, 10)


def _mu1(x: Covariates) -> np.ndarray:
    return -2.0 - x["X1"] + x["X3"] ** 2


def _mu2(x: Covariates) -> np.ndarray:
    return -1.3 + x["X1"] + 0.5 * x["X2"] - x["X3"] ** 2


def _mu5(x: Covariates) -> np.ndarray:
    return -0.8 + x["X18"] + 0.5 * x["X12"] - x["X3"] ** 2


def _region1(x: Covariates) -> np.ndarray:
    return x["X1"] + 2.0 * x["X3"] > 0


def _region2(x: Covariates) -> np.ndarray:
    return (x["X2"] > 0) | (x["X5"] < -0.5)


def _region5(x: Covariates) -> np.ndarray:
    return (x["X14"] > -0.1) & (x["X20"] == 1)


@dataclass(frozen=True)
class _Design:
    columns: tuple[str, ...]
    draw: Callable[[int, np.random.Generator], Covariates]
    mu: Callable[[Covariates], np.ndarray]
    region: Callable[[Covariates], np.ndarray]


FIVE = ("X1", "X2", "X3", "X4", "X5")

DESIGNS = {
    SimModelId.I: _Design(("X1", "X3"), _five_covariates, _mu1, _region1),
    SimModelId.II: _Design(FIVE, _five_covariates, _mu2, _region2),
    SimModelId.III: _Design(FIVE, _five_covariates, _mu1, _region2),
    SimModelId.IV: _Design(FIVE, _five_covariates, _mu2, _region1),
    SimModelId.V: _Design(
        tuple(f"X{r}" for r in range(1, 21)),
        _twenty_covariates,
        _mu5,
        _region5,
    ),
}

NOISE_COLUMNS = ("N", "U", "B")


@dataclass(frozen=True)
class SimFrame(ObservationFrame):
    """Observations plus the counterfactual means E[Y*(0)|X], E[Y*(1)|X]."""

    mean0: np.ndarray = None
    mean1: np.ndarray = None


@dataclass(frozen=True)
class SimModel:
    id: SimModelId
    c: float
    n_noise: int = 0  # appended noise covariates, always a multiple of 3
    link: LinkFunction = LinkFunction.LOGIT
    propensity: float = PROPENSITY

    def __post_init__(self):
        if not np.isfinite(self.c):
            raise ValidationError("effect intensity c must be finite")
        if self.n_noise < 0 or self.n_noise % 3:
            raise ValidationError("noise covariates come in triples")

    @classmethod
    def create(cls, model_id: str, c: float, noise_triples: int = 0):
        try:
            model_id = SimModelId(model_id)
        except ValueError:
            raise ValidationError(f"unknown model {model_id!r}")
        return cls(id=model_id, c=float(c), n_noise=3 * noise_triples)

    @property
    def design(self) -> _Design:
        return DESIGNS[self.id]

    @property
    def covariate_names(self) -> tuple[str, ...]:
        noise = tuple(
            f"{NOISE_COLUMNS[j % 3]}{j // 3 + 1}" for j in range(self.n_noise)
        )
        return self.design.columns + noise

    @property
    def p(self) -> int:
        return len(self.covariate_names)

    def _named(self, X: np.ndarray) -> Covariates:
        return {
            name: X[:, j] for j, name in enumerate(self.design.columns)
        }

    def mu(self, X: np.ndarray) -> np.ndarray:
        return self.design.mu(self._named(np.atleast_2d(X)))

    def region(self, X: np.ndarray) -> np.ndarray:
        """Indicator of the covariate region where theta is c, whatever c is."""
        return self.design.region(self._named(np.atleast_2d(X)))

    def theta(self, X: np.ndarray) -> np.ndarray:
        return self.c * self.region(X).astype(np.float64)

    def counterfactual_means(
        self, X: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray]:
        mu = self.mu(X)
        return expit(mu), expit(mu + self.theta(X))

    def draw_covariates(self, n: int, rng: np.random.Generator) -> np.ndarray:
        drawn = self.design.draw(n, rng)
        base = np.column_stack([drawn[name] for name in self.design.columns])
        if not self.n_noise:
            return base
        noise = []
        for _ in range(self.n_noise // 3):
            noise.append(rng.standard_normal(n))
            noise.append(rng.uniform(-1.0, 1.0, n))
            noise.append(rng.binomial(1, 0.5, n).astype(np.float64))
        return np.column_stack([base] + noise)


def draw_batch(model: SimModel, m: int, rng: np.random.Generator) -> SimFrame:
    """m iid units: covariates, A ~ Ber(0.5), Y ~ Ber(g^-1(mu + theta A))."""
    X = model.draw_covariates(m, rng)
    a = rng.binomial(1, model.propensity, m)
    mean0, mean1 = model.counterfactual_means(X)
    y = rng.binomial(1, np.where(a == 1, mean1, mean0)).astype(np.float64)
    return SimFrame(
        y=y, a=a.astype(np.int64), X=X, mean0=mean0, mean1=mean1
    )


def add_noise_covariates(model: SimModel, triples: int) -> SimModel:
    """Appends `triples` x (N(0,1), U[-1,1], Ber(0.5)) covariates that enter
    neither mu nor theta."""
    if triples < 0:
        raise ValidationError("triples must be non-negative")
    return replace(model, n_noise=model.n_noise + 3 * triples)


def simulated_stream(
    model: SimModel, rng: np.random.Generator, chunk: int = 20
):
    """Endless stream of observations drawn `chunk` at a time."""
    while True:
        yield from draw_batch(model, chunk, rng)
