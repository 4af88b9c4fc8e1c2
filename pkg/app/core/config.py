from __future__ import annotations

import json
import logging
import numbers
from dataclasses import asdict, dataclass, field, fields, replace
from enum import StrEnum
from pathlib import Path

from app.forest.params import ForestParams
from django.conf import settings

from .constants import CLAMP_EPS, SIGMA_FLOOR
from .exceptions import ConfigurationError
from .links import LinkFunction

logger = logging.getLogger(__name__)


def _is_count(value) -> bool:
    return (
        isinstance(value, numbers.Integral)
        and not isinstance(value, bool)
        and value >= 1
    )


class Profile(StrEnum):
    """Default constant sets: simulation studies and clickstream data."""

    SIMULATION = "simulation"
    DATA = "data"


class SigmaPolicy(StrEnum):
    FLOOR = "floor"
    SKIP = "skip"


class LambdaMethod(StrEnum):
    CLOSED_FORM = "closed_form"
    QUADRATURE = "quadrature"


PROFILE_DEFAULTS = {
    Profile.SIMULATION: {"alpha": 0.05, "m": 20, "l": 300, "M": 2300},
    Profile.DATA: {"alpha": 0.05, "m": 200, "l": 200, "M": 50000},
}

# JSON keys that map onto differently named attributes
KEY_ALIASES = {"M": "failure_time"}


@dataclass(frozen=True)
class TestConfig:
    """Constants of one sequential test run."""

    __test__ = False  # not a pytest test class

    alpha: float = 0.05
    m: int = 20
    l: int = 300  # noqa: E741
    failure_time: int = 2300
    tau2: float = 1.0
    link: LinkFunction = LinkFunction.LOGIT
    forest: ForestParams = field(default_factory=ForestParams)
    seed: int = 0
    clamp_eps: float = CLAMP_EPS
    sigma_floor: float = SIGMA_FLOOR
    sigma_policy: SigmaPolicy = SigmaPolicy.FLOOR
    lambda_method: LambdaMethod = LambdaMethod.CLOSED_FORM
    subgroup_max_depth: int = 3
    known_var: float = 1.0

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ConfigurationError("alpha must lie in (0, 1)")
        if not all(_is_count(v) for v in (self.m, self.l)):
            raise ConfigurationError("m and l must be positive integers")
        if not _is_count(self.failure_time):
            raise ConfigurationError("failure time M must be an integer")
        if self.failure_time <= self.l:
            raise ConfigurationError("failure time M must exceed l")
        if self.tau2 <= 0:
            raise ConfigurationError("tau2 must be positive")
        if not 0 < self.clamp_eps < 0.5:
            raise ConfigurationError("clamp_eps must lie in (0, 0.5)")
        if self.sigma_floor <= 0:
            raise ConfigurationError("sigma_floor must be positive")
        if self.known_var <= 0:
            raise ConfigurationError("known_var must be positive")
        if self.subgroup_max_depth < 0:
            raise ConfigurationError("subgroup_max_depth must be >= 0")

    @property
    def threshold(self) -> float:
        """Rejection boundary 1 / alpha."""
        return 1.0 / self.alpha

    @classmethod
    def from_dict(
        cls, data: dict, profile: Profile | str = Profile.SIMULATION
    ) -> TestConfig:
        """Builds a config from a JSON-style dict layered over a profile.

        Unknown keys are rejected rather than ignored."""
        try:
            profile = Profile(profile)
        except ValueError:
            raise ConfigurationError(f"unknown profile {profile!r}")
        merged = dict(PROFILE_DEFAULTS[profile])
        merged.update(data)
        known = {f.name for f in fields(cls)} | set(KEY_ALIASES)
        unknown = sorted(set(merged) - known - {"profile"})
        if unknown:
            raise ConfigurationError(
                f"unknown configuration keys: {', '.join(unknown)}"
            )
        merged.pop("profile", None)
        kwargs = {KEY_ALIASES.get(k, k): v for k, v in merged.items()}
        forest = dict(kwargs.pop("forest", None) or {})
        forest.setdefault("n_trees", settings.SUBTLE_N_TREES)
        forest.setdefault("seed", kwargs.get("seed", 0))
        kwargs.setdefault("sigma_policy", settings.SUBTLE_SIGMA_POLICY)
        try:
            return cls(
                forest=ForestParams(**forest),
                **{
                    **kwargs,
                    "link": LinkFunction(kwargs.get("link", "logit")),
                    "sigma_policy": SigmaPolicy(kwargs["sigma_policy"]),
                    "lambda_method": LambdaMethod(
                        kwargs.get("lambda_method", "closed_form")
                    ),
                },
            )
        except (TypeError, ValueError) as e:
            raise ConfigurationError(f"invalid configuration: {e}")

    @classmethod
    def from_file(
        cls, path: str | Path | None, profile: Profile | str
    ) -> TestConfig:
        if path is None:
            return cls.from_dict({}, profile)
        try:
            with open(path) as config_file:
                data = json.load(config_file)
        except FileNotFoundError:
            raise ConfigurationError(f"config file {path} not found")
        except ValueError as e:
            raise ConfigurationError(f"config file {path} is not JSON: {e}")
        if not isinstance(data, dict):
            raise ConfigurationError("config must be a JSON object")
        profile = data.get("profile", profile)
        return cls.from_dict(data, profile)

    def with_seed(self, seed: int) -> TestConfig:
        return replace(self, seed=seed, forest=replace(self.forest, seed=seed))

    def as_dict(self) -> dict:
        data = asdict(self)
        data["M"] = data.pop("failure_time")
        for key in ("link", "sigma_policy", "lambda_method"):
            data[key] = str(data[key])
        return data
