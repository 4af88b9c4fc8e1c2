"""Mixture sequential probability ratio test for paired two-arm streams.

Pairs (y0, y1) arrive one at a time and Z_i = y1 - y0. With a N(0, tau2)
mixture over the mean difference theta and Z_i ~ N(theta, v):

    Lambda_n = sqrt(v / (v + n tau2)) exp{tau2 S_n^2 / (2 v (v + n tau2))}

with S_n the running sum of Z_i. The normal variant takes v = 2 known_var;
the Bernoulli variant plugs in the estimated variance of a difference of
proportions, p0 (1 - p0) + p1 (1 - p1).
"""

from __future__ import annotations

import logging
import math
import warnings
from dataclasses import dataclass, replace
from enum import StrEnum

import numpy as np
from app.core.constants import LAMBDA_CAP
from app.core.exceptions import NumericalError, ValidationError
from scipy import integrate
from scipy.stats import norm

logger = logging.getLogger(__name__)


class MsprtKind(StrEnum):
    NORMAL = "normal"
    BERNOULLI = "bernoulli"


@dataclass(frozen=True)
class MsprtState:
    kind: MsprtKind
    tau2: float
    alpha: float
    n: int = 0
    sum_z: float = 0.0
    sum_z2: float = 0.0
    successes0: int = 0
    successes1: int = 0
    # None until the variance of a difference can be estimated
    lambda_: float | None = None

    @property
    def insufficient_data(self) -> bool:
        return self.lambda_ is None

    @property
    def rejected(self) -> bool:
        return self.lambda_ is not None and self.lambda_ >= 1.0 / self.alpha


def new_msprt_state(
    kind: MsprtKind | str, tau2: float = 1.0, alpha: float = 0.05
) -> MsprtState:
    if tau2 <= 0:
        raise ValidationError("tau2 must be positive")
    if not 0 < alpha < 1:
        raise ValidationError("alpha must lie in (0, 1)")
    return MsprtState(kind=MsprtKind(kind), tau2=tau2, alpha=alpha)


def msprt_lambda(n: int, sum_z: float, variance: float, tau2: float) -> float:
    """Closed-form normal-mixture likelihood ratio after n pairs,
    capped at LAMBDA_CAP."""
    if variance <= 0:
        raise ValidationError("variance must be positive")
    spread = variance + n * tau2
    log_value = 0.5 * math.log(variance / spread) + tau2 * sum_z**2 / (
        2.0 * variance * spread
    )
    with np.errstate(over="ignore"):
        return min(float(np.exp(log_value)), LAMBDA_CAP)


def msprt_lambda_quadrature(
    n: int, sum_z: float, variance: float, tau2: float
) -> float:
    """Integrates the likelihood ratio exp{theta S / v - n theta^2 / (2 v)}
    against the N(0, tau2) density over the real line."""
    if variance <= 0:
        raise ValidationError("variance must be positive")
    sd = math.sqrt(tau2)

    def log_integrand(theta):
        return (
            theta * sum_z / variance
            - n * theta**2 / (2.0 * variance)
            + norm.logpdf(theta, scale=sd)
        )

    precision = n / variance + 1.0 / tau2
    mode = (sum_z / variance) / precision
    width = 1.0 / math.sqrt(precision)
    log_peak = float(log_integrand(mode))
    total = error = 0.0
    pieces = [
        (-np.inf, mode - 10 * width),
        (mode - 10 * width, mode),
        (mode, mode + 10 * width),
        (mode + 10 * width, np.inf),
    ]
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for lower, upper in pieces:
            try:
                value, abserr = integrate.quad(
                    lambda t: math.exp(float(log_integrand(t)) - log_peak),
                    lower,
                    upper,
                    epsabs=0.0,
                    epsrel=1e-11,
                    limit=200,
                )
            except integrate.IntegrationWarning as e:
                raise NumericalError(f"quadrature did not converge: {e}")
            total += value
            error += abserr
    if error > 1e-8 * total:
        raise NumericalError(f"quadrature error {error:.3g} too large")
    with np.errstate(over="ignore"):
        return float(np.exp(log_peak) * total)


def msprt_step_normal(
    state: MsprtState, pair: tuple[float, float], known_var: float
) -> MsprtState:
    """Adds one pair of normal outcomes with known per-arm variance."""
    if known_var <= 0:
        raise ValidationError("known variance must be positive")
    y0, y1 = pair
    z = float(y1) - float(y0)
    if not math.isfinite(z):
        raise ValidationError("pair outcomes must be finite")
    n = state.n + 1
    sum_z = state.sum_z + z
    return replace(
        state,
        n=n,
        sum_z=sum_z,
        sum_z2=state.sum_z2 + z * z,
        lambda_=msprt_lambda(n, sum_z, 2.0 * known_var, state.tau2),
    )


def bernoulli_variance(n: int, successes0: int, successes1: int) -> float:
    p0 = successes0 / n
    p1 = successes1 / n
    return p0 * (1 - p0) + p1 * (1 - p1)


def msprt_step_bernoulli(
    state: MsprtState, pair: tuple[int, int]
) -> MsprtState:
    """Adds one pair of binary outcomes.

    Lambda stays None ("insufficient data") while the plug-in variance of
    the difference is zero, i.e. until some arm has seen both outcomes."""
    y0, y1 = pair
    if y0 not in (0, 1) or y1 not in (0, 1):
        raise ValidationError(f"Bernoulli outcomes must be 0 or 1, got {pair}")
    n = state.n + 1
    successes0 = state.successes0 + int(y0)
    successes1 = state.successes1 + int(y1)
    z = int(y1) - int(y0)
    sum_z = state.sum_z + z
    variance = bernoulli_variance(n, successes0, successes1)
    return replace(
        state,
        n=n,
        sum_z=sum_z,
        sum_z2=state.sum_z2 + z * z,
        successes0=successes0,
        successes1=successes1,
        lambda_=(
            msprt_lambda(n, sum_z, variance, state.tau2)
            if variance > 0
            else None
        ),
    )
