"""Mixture probability ratio Lambda_k for the standardised statistic R_k.

With S = sum of 1/sigma_hat_j over the first k batches, R_k is approximately
N(S * Delta / sqrt(k), 1), and Lambda_k integrates the ratio of that density
to N(0, 1) at R_k against a half-normal prior on Delta > 0 with variance tau2.
The prior is conjugate, so the integral has a closed form; the quadrature
version evaluates the defining integral directly and serves as its oracle.
"""

from __future__ import annotations

import logging
import math
import warnings

import numpy as np
from app.core.constants import LAMBDA_CAP
from app.core.exceptions import NumericalError, ValidationError
from scipy import integrate
from scipy.stats import norm

logger = logging.getLogger(__name__)

QUADRATURE_RTOL = 1e-8


def _check_inputs(k, sum_inv_sigma, tau2):
    if k < 1:
        raise ValidationError("k must be at least 1")
    if not sum_inv_sigma > 0:
        raise ValidationError("sum of inverse sigmas must be positive")
    if not tau2 > 0:
        raise ValidationError("tau2 must be positive")


def r_statistic(k: int, sum_weighted_d: float) -> float:
    """R_k = sum_j D_bar_j / sigma_hat_j / sqrt(k)."""
    if k < 1:
        raise ValidationError("k must be at least 1")
    return sum_weighted_d / math.sqrt(k)


def delta_hat(sum_weighted_d: float, sum_inv_sigma: float) -> float:
    """Precision-weighted value difference estimate."""
    if sum_inv_sigma <= 0:
        raise ValidationError("sum of inverse sigmas must be positive")
    return sum_weighted_d / sum_inv_sigma


def posterior_moments(
    k: int, sum_inv_sigma: float, r_k: float, tau2: float
) -> tuple[float, float]:
    """Mean and variance of the normal kernel left after completing the square
    in Delta; the half-normal prior truncates it to Delta > 0."""
    scale = sum_inv_sigma**2 * tau2 + k
    mean = math.sqrt(k) * sum_inv_sigma * r_k * tau2 / scale
    variance = k * tau2 / scale
    return mean, variance


def log_lambda_closed_form(
    k: int, sum_inv_sigma: float, r_k: float, tau2: float
) -> float:
    _check_inputs(k, sum_inv_sigma, tau2)
    t_sq = tau2 * sum_inv_sigma**2
    mean, variance = posterior_moments(k, sum_inv_sigma, r_k, tau2)
    return (
        math.log(2.0)
        + 0.5 * math.log(k / (k + t_sq))
        + t_sq * r_k**2 / (2.0 * (t_sq + k))
        + float(norm.logcdf(mean / math.sqrt(variance)))
    )


def lambda_closed_form(
    k: int, sum_inv_sigma: float, r_k: float, tau2: float
) -> float:
    """Lambda_k = 2 sqrt(k / (k + T^2)) exp{(T R_k)^2 / (2 (T^2 + k))}
    (1 - F(0)), with T = tau * sum_inv_sigma and F the normal CDF with the
    posterior moments above. Overflows to inf rather than raising."""
    with np.errstate(over="ignore"):
        return float(
            np.exp(log_lambda_closed_form(k, sum_inv_sigma, r_k, tau2))
        )


def truncated_normal_density(delta, tau2: float):
    """Half-normal mixture density 2 / sqrt(2 pi tau2) exp(-delta^2 / 2 tau2)
    on delta > 0, zero elsewhere."""
    delta = np.asarray(delta, dtype=np.float64)
    density = np.where(
        delta > 0, 2.0 * norm.pdf(delta, scale=math.sqrt(tau2)), 0.0
    )
    return float(density) if density.ndim == 0 else density


def probability_ratio(
    k: int, sum_inv_sigma: float, r_k: float, delta: float
) -> float:
    """lambda_k at a fixed Delta: N(S Delta / sqrt(k), 1) over N(0, 1)."""
    shift = sum_inv_sigma * delta / math.sqrt(k)
    return math.exp(
        float(norm.logpdf(r_k, loc=shift) - norm.logpdf(r_k))
    )


def lambda_quadrature(
    k: int, sum_inv_sigma: float, r_k: float, tau2: float
) -> float:
    """Adaptive quadrature of the defining mixture integral over Delta > 0.

    The integrand is rescaled by its value at the mode so large Lambda values
    keep full relative precision. Raises NumericalError when scipy reports an
    integration problem or the error estimate exceeds the tolerance."""
    _check_inputs(k, sum_inv_sigma, tau2)
    shift_per_delta = sum_inv_sigma / math.sqrt(k)
    sd = math.sqrt(tau2)

    def log_integrand(delta):
        return (
            norm.logpdf(r_k, loc=shift_per_delta * delta)
            - norm.logpdf(r_k)
            + math.log(2.0)
            + norm.logpdf(delta, scale=sd)
        )

    mean, variance = posterior_moments(k, sum_inv_sigma, r_k, tau2)
    mode = max(mean, 0.0)
    log_peak = float(log_integrand(mode))
    width = math.sqrt(variance)

    def scaled(delta):
        return math.exp(float(log_integrand(delta)) - log_peak)

    far = mode + 10 * width
    pieces = [(0.0, mode), (mode, far), (far, np.inf)]
    total = error = 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        for lower, upper in pieces:
            if upper <= lower:
                continue
            try:
                value, abserr = integrate.quad(
                    scaled, lower, upper, epsabs=0.0, epsrel=1e-11, limit=200
                )
            except integrate.IntegrationWarning as e:
                raise NumericalError(f"quadrature did not converge: {e}")
            total += value
            error += abserr
    if not total > 0 or error > QUADRATURE_RTOL * total:
        raise NumericalError(
            f"quadrature error {error:.3g} too large for value {total:.3g}"
        )
    with np.errstate(over="ignore"):
        return float(np.exp(log_peak) * total)


def compute_lambda(
    k: int, sum_inv_sigma: float, r_k: float, tau2: float, method: str
) -> float:
    """Lambda_k by the configured method, capped at LAMBDA_CAP."""
    if method == "quadrature":
        value = lambda_quadrature(k, sum_inv_sigma, r_k, tau2)
    else:
        value = lambda_closed_form(k, sum_inv_sigma, r_k, tau2)
    return min(value, LAMBDA_CAP)
