from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from app.core.exceptions import ValidationError
from app.lib.parallel import parallel_map
from app.lib.seeding import make_rng

from .params import ForestParams
from .trees import Criterion, Tree, grow_tree

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RegressionForest:
    """Bagged regression trees; a prediction is the mean of the leaf means."""

    trees: tuple[Tree, ...]
    n_features: int
    n_samples: int
    y_min: float
    y_max: float

    def predict(self, X) -> np.ndarray:
        X = _as_matrix(X, self.n_features)
        total = np.zeros(X.shape[0])
        for tree in self.trees:
            total += tree.predict(X)
        return total / len(self.trees)


def _as_matrix(X, p: int | None = None) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if p is not None and X.shape[1] != p:
        raise ValidationError(
            f"expected {p} covariates, got {X.shape[1]}"
        )
    return X


def _fit_one_tree(
    X: np.ndarray, y: np.ndarray, params: ForestParams, index: int
) -> Tree:
    rng = make_rng(params.seed, index)
    if params.bootstrap:
        rows = rng.integers(0, len(y), size=len(y))
        X, y = X[rows], y[rows]
    return grow_tree(
        X,
        y,
        criterion=Criterion.MSE,
        min_leaf=params.min_leaf,
        max_depth=params.max_depth,
        mtry=params.resolve_mtry(X.shape[1]),
        rng=rng,
    )


def fit_forest(
    X, y, params: ForestParams, n_jobs: int | None = 1
) -> RegressionForest:
    """Fits `params.n_trees` regression trees.

    Tree i draws its bootstrap rows and candidate features from a generator
    seeded by (params.seed, i), so the forest is the same for any `n_jobs`.
    """
    y = np.asarray(y, dtype=np.float64).ravel()
    if len(y) == 0:
        raise ValidationError("cannot fit a forest on empty data")
    X = _as_matrix(X)
    if X.shape[0] != len(y):
        raise ValidationError(
            f"{X.shape[0]} covariate rows for {len(y)} responses"
        )
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValidationError("forest training data must be finite")
    trees = parallel_map(
        lambda index: _fit_one_tree(X, y, params, index),
        range(params.n_trees),
        n_jobs=n_jobs,
        prefer="threads",
    )
    return RegressionForest(
        trees=tuple(trees),
        n_features=X.shape[1],
        n_samples=len(y),
        y_min=float(y.min()),
        y_max=float(y.max()),
    )


def predict_forest(forest: RegressionForest, x):
    """Prediction for one covariate vector (float) or a matrix (array)."""
    predictions = forest.predict(x)
    if np.ndim(x) == 1:
        return float(predictions[0])
    return predictions
