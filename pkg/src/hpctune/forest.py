"""Random-forest regression with per-point uncertainty for the tuning surrogate.

Trees are binary regression trees over index-encoded points: axis-aligned
threshold splits chosen by variance reduction, leaf value = mean of the
targets that reached it. The forest's prediction at a point is the mean of
the per-tree leaf values; its uncertainty is the population standard
deviation across trees. Everything is deterministic given the training
order and the seed: per-tree RNG streams are ``seed + tree_index``, split
ties break on lowest coordinate index then lowest threshold, and candidate
thresholds are midpoints between consecutive distinct sorted coordinate
values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ForestParams:
    """Forest hyperparameters. ``max_features=None`` means max(1, d//3); "all" uses every coordinate."""

    n_trees: int = 50
    min_samples_leaf: int = 1
    max_features: int | str | None = None
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if isinstance(self.max_features, str) and self.max_features != "all":
            raise ValueError(f"max_features must be a positive int, 'all', or None, got {self.max_features!r}")
        if isinstance(self.max_features, int) and self.max_features < 1:
            raise ValueError("max_features must be >= 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    def resolve_max_features(self, n_dims: int) -> int:
        if self.max_features is None:
            return max(1, n_dims // 3)
        if self.max_features == "all":
            return n_dims
        if self.max_features > n_dims:
            raise ValueError(f"max_features {self.max_features} exceeds dimension {n_dims}")
        return self.max_features


@dataclass(frozen=True)
class Prediction:
    mean: float
    std: float


class _Node:
    """Internal split node: samples with coords[feature] <= threshold go left."""

    __slots__ = ("feature", "threshold", "left", "right")

    def __init__(self, feature: int, threshold: float, left, right):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right


class _Leaf:
    __slots__ = ("value",)

    def __init__(self, value: float):
        self.value = value


def _best_split(X: np.ndarray, y: np.ndarray, features: np.ndarray, min_leaf: int):
    """Exhaustive variance-reduction split over the given features.

    Cost of a split is the summed within-child squared error (equivalently
    n_l*var_l + n_r*var_r); the minimizing (feature, threshold) wins, with
    ties resolved by scanning features in ascending index order and
    thresholds in ascending order, accepting only strict improvements.
    """
    n = len(y)
    best = None  # (cost, feature, threshold)
    for f in features:
        order = np.argsort(X[:, f], kind="stable")
        v = X[order, f]
        t = y[order]
        # split after position k (1..n-1) is valid where the value changes
        boundaries = np.nonzero(v[:-1] < v[1:])[0] + 1
        if boundaries.size == 0:
            continue
        boundaries = boundaries[(boundaries >= min_leaf) & (boundaries <= n - min_leaf)]
        if boundaries.size == 0:
            continue
        s1 = np.cumsum(t)
        s2 = np.cumsum(t * t)
        total1, total2 = s1[-1], s2[-1]
        k = boundaries
        left1, left2 = s1[k - 1], s2[k - 1]
        sse_left = left2 - left1 * left1 / k
        right1 = total1 - left1
        sse_right = (total2 - left2) - right1 * right1 / (n - k)
        costs = np.maximum(sse_left, 0.0) + np.maximum(sse_right, 0.0)
        i = int(np.argmin(costs))  # first occurrence = lowest threshold on ties
        cost = float(costs[i])
        if best is None or cost < best[0]:
            ki = int(k[i])
            threshold = (v[ki - 1] + v[ki]) / 2.0
            best = (cost, int(f), float(threshold))
    return best


def _build(X: np.ndarray, y: np.ndarray, rng: np.random.Generator, max_features: int, min_leaf: int):
    n, d = X.shape
    if n < 2 * min_leaf or np.all(y == y[0]):
        return _Leaf(float(np.mean(y)))
    features = np.sort(rng.choice(d, size=max_features, replace=False))
    best = _best_split(X, y, features, min_leaf)
    if best is None:
        return _Leaf(float(np.mean(y)))
    _, f, threshold = best
    mask = X[:, f] <= threshold
    left = _build(X[mask], y[mask], rng, max_features, min_leaf)
    right = _build(X[~mask], y[~mask], rng, max_features, min_leaf)
    return _Node(f, threshold, left, right)


def _tree_predict(node, X: np.ndarray) -> np.ndarray:
    out = np.empty(len(X), dtype=float)
    _route(node, X, np.arange(len(X)), out)
    return out


def _route(node, X: np.ndarray, idx: np.ndarray, out: np.ndarray) -> None:
    if isinstance(node, _Leaf):
        out[idx] = node.value
        return
    mask = X[idx, node.feature] <= node.threshold
    _route(node.left, X, idx[mask], out)
    _route(node.right, X, idx[~mask], out)


class SurrogateModel:
    """A fitted forest plus a snapshot of its training set. Immutable; predict is read-only."""

    def __init__(self, trees: list, n_dims: int, train_x: np.ndarray, train_y: np.ndarray):
        self.trees = trees
        self.n_dims = n_dims
        self.train_x = train_x
        self.train_y = train_y

    def predict_batch(self, X) -> tuple[np.ndarray, np.ndarray]:
        """Per-point (mean, std) where std is the population standard deviation
        of the per-tree predictions (divisor = number of trees)."""
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.n_dims:
            raise ValueError(f"expected points of dimension {self.n_dims}, got shape {X.shape}")
        per_tree = np.stack([_tree_predict(t, X) for t in self.trees])
        return per_tree.mean(axis=0), per_tree.std(axis=0)

    def predict(self, x) -> Prediction:
        means, stds = self.predict_batch(np.asarray(x, dtype=float).reshape(1, -1))
        return Prediction(float(means[0]), float(stds[0]))


def fit(points, params: ForestParams = ForestParams()) -> SurrogateModel:
    """Fit a forest of exactly ``params.n_trees`` trees on (encoded point, target) pairs.

    Per tree: draw a bootstrap resample (with replacement, same size) when
    ``params.bootstrap``, else train on all points; grow by recursive
    variance-reduction splits restricted to ``max_features`` randomly chosen
    coordinates per node; stop a node when it holds fewer than
    2*min_samples_leaf points or its targets have zero variance.
    """
    pts = list(points)
    if not pts:
        raise ValueError("training set is empty")
    X = np.asarray([p for p, _ in pts], dtype=float)
    y = np.asarray([t for _, t in pts], dtype=float)
    if X.ndim != 2:
        raise ValueError("encoded points must share a common dimension")
    n, d = X.shape
    max_features = params.resolve_max_features(d)
    trees = []
    for i in range(params.n_trees):
        rng = np.random.default_rng(params.seed + i)
        if params.bootstrap:
            idx = rng.integers(0, n, size=n)
            xb, yb = X[idx], y[idx]
        else:
            xb, yb = X, y
        trees.append(_build(xb, yb, rng, max_features, params.min_samples_leaf))
    return SurrogateModel(trees, d, X.copy(), y.copy())
