"""Axis-aligned CART trees grown on numpy arrays.

A node sends x to the left child when x[feature] < threshold and to the right
child otherwise. Thresholds are midpoints between consecutive sorted unique
values, or the upper value when the two are adjacent doubles. Among equally
good splits the lowest feature index wins, then the lowest threshold.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np

logger = logging.getLogger(__name__)

LEAF = -1

# Relative slack when comparing split gains, so that tie-breaking does not
# depend on the summation order of the rows
GAIN_TOLERANCE = 1e-12


class Criterion(StrEnum):
    MSE = "mse"
    GINI = "gini"


@dataclass
class Tree:
    """Flat array representation of a fitted binary tree.

    Node 0 is the root. For leaves `feature` is LEAF and `value` holds the
    leaf mean (regression) or the 0/1 label (classification)."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)
    depth: list[int] = field(default_factory=list)
    n_features: int = 0

    def add_node(self, value: float, depth: int) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append(float(value))
        self.depth.append(depth)
        return len(self.feature) - 1

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] == LEAF

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def leaves(self) -> list[int]:
        """Leaves reachable from the root (pruning can orphan nodes)."""
        found, stack = [], [0]
        while stack:
            node = stack.pop()
            if self.is_leaf(node):
                found.append(node)
            else:
                stack.extend((self.right[node], self.left[node]))
        return found

    @property
    def max_depth(self) -> int:
        return max(self.depth[n] for n in self.leaves())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of X."""
        feature = np.asarray(self.feature)
        threshold = np.asarray(self.threshold)
        left = np.asarray(self.left)
        right = np.asarray(self.right)
        nodes = np.zeros(X.shape[0], dtype=np.int64)
        active = feature[nodes] != LEAF
        while active.any():
            rows = np.flatnonzero(active)
            current = nodes[rows]
            go_left = X[rows, feature[current]] < threshold[current]
            nodes[rows] = np.where(go_left, left[current], right[current])
            active = feature[nodes] != LEAF
        return nodes

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(self.value)[self.apply(X)]


def _split_scores(
    xs: np.ndarray, ys: np.ndarray, min_leaf: int, criterion: Criterion
) -> tuple[np.ndarray, np.ndarray]:
    """Impurity of every admissible split of sorted (xs, ys).

    Returns the split positions (last index of the left side) and the summed
    child impurity at each; lower is better."""
    n = len(xs)
    positions = np.arange(min_leaf - 1, n - min_leaf)
    if positions.size == 0:
        return positions, np.empty(0)
    positions = positions[xs[positions] < xs[positions + 1]]
    if positions.size == 0:
        return positions, np.empty(0)
    n_left = positions + 1.0
    n_right = n - n_left
    cumulative = np.cumsum(ys)
    sum_left = cumulative[positions]
    sum_right = cumulative[-1] - sum_left
    if criterion == Criterion.MSE:
        cumulative_sq = np.cumsum(ys * ys)
        sq_left = cumulative_sq[positions]
        sq_right = cumulative_sq[-1] - sq_left
        impurity = (sq_left - sum_left**2 / n_left) + (
            sq_right - sum_right**2 / n_right
        )
    else:
        share_left = sum_left / n_left
        share_right = sum_right / n_right
        impurity = 2.0 * (
            n_left * share_left * (1 - share_left)
            + n_right * share_right * (1 - share_right)
        )
    return positions, impurity


def _midpoint(lo: float, hi: float) -> float:
    """Threshold separating lo < hi under `x < threshold`."""
    mid = 0.5 * (lo + hi)
    return mid if lo < mid <= hi else hi


def _node_impurity(y: np.ndarray, criterion: Criterion) -> float:
    if criterion == Criterion.MSE:
        return float(np.sum((y - y.mean()) ** 2))
    share = y.mean()
    return float(2.0 * len(y) * share * (1 - share))


def _leaf_value(y: np.ndarray, criterion: Criterion) -> float:
    if criterion == Criterion.MSE:
        return float(y.mean())
    # majority vote, ties go to control
    return 1.0 if 2 * y.sum() > len(y) else 0.0


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    *,
    criterion: Criterion = Criterion.MSE,
    min_leaf: int = 1,
    max_depth: int | None = None,
    mtry: int | None = None,
    rng: np.random.Generator | None = None,
) -> Tree:
    """Grows one CART tree.

    When `mtry` is smaller than the number of covariates, `mtry` candidate
    features are drawn without replacement at every node from `rng`.
    """
    n, p = X.shape
    mtry = p if mtry is None else mtry
    if mtry < p and rng is None:
        raise ValueError("feature subsampling needs a random generator")
    tree = Tree(n_features=p)
    root = tree.add_node(_leaf_value(y, criterion), depth=0)
    stack = [(root, np.arange(n))]
    while stack:
        node, rows = stack.pop()
        depth = tree.depth[node]
        y_node = y[rows]
        parent = _node_impurity(y_node, criterion)
        if (
            len(rows) < 2 * min_leaf
            or (max_depth is not None and depth >= max_depth)
            or parent <= 1e-14
        ):
            continue
        if mtry < p:
            candidates = np.sort(rng.choice(p, size=mtry, replace=False))
        else:
            candidates = np.arange(p)
        best_score = parent
        best = None
        for feature in candidates:
            x_node = X[rows, feature]
            order = np.argsort(x_node, kind="stable")
            xs = x_node[order]
            positions, scores = _split_scores(
                xs, y_node[order], min_leaf, criterion
            )
            if scores.size == 0:
                continue
            i = int(np.argmin(scores))
            slack = GAIN_TOLERANCE * max(1.0, abs(best_score))
            if scores[i] < best_score - slack:
                position = positions[i]
                best_score = scores[i]
                threshold = _midpoint(xs[position], xs[position + 1])
                best = (int(feature), float(threshold))
        if best is None:
            continue
        feature, threshold = best
        goes_left = X[rows, feature] < threshold
        left = tree.add_node(
            _leaf_value(y_node[goes_left], criterion), depth + 1
        )
        right = tree.add_node(
            _leaf_value(y_node[~goes_left], criterion), depth + 1
        )
        tree.feature[node] = feature
        tree.threshold[node] = threshold
        tree.left[node] = left
        tree.right[node] = right
        stack.append((right, rows[~goes_left]))
        stack.append((left, rows[goes_left]))
    return tree


def prune_equal_leaves(tree: Tree) -> Tree:
    """Collapses splits whose two children are leaves with the same value."""
    changed = True
    while changed:
        changed = False
        for node in range(tree.node_count):
            if tree.is_leaf(node):
                continue
            left, right = tree.left[node], tree.right[node]
            if (
                tree.is_leaf(left)
                and tree.is_leaf(right)
                and tree.value[left] == tree.value[right]
            ):
                tree.feature[node] = LEAF
                tree.left[node] = tree.right[node] = LEAF
                tree.value[node] = tree.value[left]
                changed = True
    return tree
