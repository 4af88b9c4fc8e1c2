import logging
from enum import StrEnum

import numpy as np
from scipy.special import expit, logit

from .constants import CLAMP_EPS
from .exceptions import ValidationError

logger = logging.getLogger(__name__)


class LinkFunction(StrEnum):
    """Link g connecting E(Y | A, X) to mu(X) + theta(X) * A."""

    IDENTITY = "identity"
    LOGIT = "logit"


def _check_finite(value, name):
    if not np.all(np.isfinite(value)):
        raise ValidationError(f"{name} must be finite")


def apply_inverse_link(link: LinkFunction, eta):
    """Maps a linear predictor to the mean scale.

    Works on scalars and numpy arrays; scalars come back as float."""
    eta = np.asarray(eta, dtype=np.float64)
    _check_finite(eta, "eta")
    if link == LinkFunction.IDENTITY:
        result = eta
    else:
        result = expit(eta)
    return float(result) if result.ndim == 0 else result


def apply_link(link: LinkFunction, mu, clamp_eps: float = CLAMP_EPS):
    """Maps a mean to the linear predictor scale.

    For the logit link the mean is first clamped into
    [clamp_eps, 1 - clamp_eps] so that forest predictions of exactly
    0 or 1 stay finite."""
    mu = np.asarray(mu, dtype=np.float64)
    _check_finite(mu, "mu")
    if link == LinkFunction.IDENTITY:
        result = mu
    else:
        result = logit(np.clip(mu, clamp_eps, 1.0 - clamp_eps))
    return float(result) if result.ndim == 0 else result
