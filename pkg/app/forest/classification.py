from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from app.core.exceptions import ValidationError

from .trees import Criterion, Tree, grow_tree, prune_equal_leaves

logger = logging.getLogger(__name__)

EMPTY_RULE_TEXT = "∅ (no beneficial subgroup)"
EVERYONE_RULE_TEXT = "{all units}"


@dataclass(frozen=True)
class ClassificationTree:
    """Single Gini tree with 0/1 leaf labels describing a subgroup."""

    tree: Tree
    max_depth: int | None
    min_leaf: int

    @property
    def n_features(self) -> int:
        return self.tree.n_features

    @property
    def depth(self) -> int:
        return self.tree.max_depth

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.shape[1] != self.n_features:
            raise ValidationError(
                f"expected {self.n_features} covariates, got {X.shape[1]}"
            )
        return self.tree.predict(X).astype(np.int64)

    def to_dict(self, node: int = 0, names: Sequence[str] | None = None):
        """Nested {feature, threshold, left, right} / {label} description."""
        tree = self.tree
        if tree.is_leaf(node):
            return {"label": int(tree.value[node])}
        feature = tree.feature[node]
        return {
            "feature": names[feature] if names else _default_name(feature),
            "threshold": tree.threshold[node],
            "left": self.to_dict(tree.left[node], names),
            "right": self.to_dict(tree.right[node], names),
        }


def fit_classification_tree(
    X, labels, max_depth: int | None = 3, min_leaf: int = 1
) -> ClassificationTree:
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64).ravel()
    if len(labels) == 0:
        raise ValidationError("cannot fit a tree on empty data")
    if X.ndim != 2 or X.shape[0] != len(labels):
        raise ValidationError("covariates and labels do not line up")
    if not np.isin(labels, (0.0, 1.0)).all():
        raise ValidationError("labels must be 0 or 1")
    tree = grow_tree(
        X,
        labels,
        criterion=Criterion.GINI,
        min_leaf=min_leaf,
        max_depth=max_depth,
    )
    return ClassificationTree(
        tree=prune_equal_leaves(tree), max_depth=max_depth, min_leaf=min_leaf
    )


def _default_name(feature: int) -> str:
    return f"X{feature + 1}"


def _format_threshold(value: float) -> str:
    text = f"{value:.4f}".rstrip("0").rstrip(".")
    return "0" if text in ("", "-0") else text


def _positive_paths(tree: Tree) -> list[list[tuple[int, str, float]]]:
    paths = []
    stack = [(0, [])]
    while stack:
        node, conditions = stack.pop()
        if tree.is_leaf(node):
            if tree.value[node] == 1:
                paths.append(conditions)
            continue
        feature, threshold = tree.feature[node], tree.threshold[node]
        stack.append(
            (tree.right[node], conditions + [(feature, "≥", threshold)])
        )
        stack.append(
            (tree.left[node], conditions + [(feature, "<", threshold)])
        )
    return paths


def _tighten(conditions):
    """Keeps the tightest bound per (feature, direction), first seen first."""
    bounds = {}
    for feature, op, threshold in conditions:
        key = (feature, op)
        if key not in bounds:
            bounds[key] = threshold
        elif op == "<":
            bounds[key] = min(bounds[key], threshold)
        else:
            bounds[key] = max(bounds[key], threshold)
    return [(f, op, t) for (f, op), t in bounds.items()]


def tree_to_rule_text(
    t: ClassificationTree, names: Sequence[str] | None = None
) -> str:
    """Readable union of the boxes labelled 1, e.g.
    "{X3 < 0.7 or (X3 ≥ 0.7 and X1 ≥ 0)}"."""
    paths = _positive_paths(t.tree)
    if not paths:
        return EMPTY_RULE_TEXT
    if paths == [[]]:
        return EVERYONE_RULE_TEXT
    clauses = []
    for conditions in paths:
        parts = [
            f"{names[f] if names else _default_name(f)} {op} "
            f"{_format_threshold(threshold)}"
            for f, op, threshold in _tighten(conditions)
        ]
        clause = " and ".join(parts)
        if len(parts) > 1 and len(paths) > 1:
            clause = f"({clause})"
        clauses.append(clause)
    return "{" + " or ".join(clauses) + "}"
