from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from app.core.exceptions import ConfigurationError, ValidationError


@dataclass(frozen=True)
class ForestParams:
    """Hyperparameters for the nuisance regression forests.

    `mtry=None` means ceil(p / 3), resolved once the covariate count is known.
    `max_depth=None` grows trees until `min_leaf` or purity stops them.
    """

    n_trees: int = 100
    mtry: int | None = None
    min_leaf: int = 5
    max_depth: int | None = None
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigurationError("n_trees must be at least 1")
        if self.min_leaf < 1:
            raise ConfigurationError("min_leaf must be at least 1")
        if self.mtry is not None and self.mtry < 1:
            raise ConfigurationError("mtry must be at least 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigurationError("max_depth must be non-negative")

    def resolve_mtry(self, p: int) -> int:
        if self.mtry is None:
            return max(1, math.ceil(p / 3))
        if self.mtry > p:
            raise ValidationError(f"mtry={self.mtry} exceeds {p} covariates")
        return self.mtry

    def as_dict(self) -> dict:
        return asdict(self)
