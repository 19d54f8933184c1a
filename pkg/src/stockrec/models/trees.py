"""Regression tree built on the best-split kernel; shared by RF and GBM."""

from __future__ import annotations

import numpy as np

from ..kernels import best_split


class _Node:
    __slots__ = ("feature", "threshold", "left", "right", "value")

    def __init__(self, value):
        self.feature = -1
        self.threshold = 0.0
        self.left = None
        self.right = None
        self.value = value


class RegressionTree:
    """CART-style regression tree minimizing squared error.

    Ties in split search are broken by lowest feature index, then lowest
    threshold. ``max_features`` draws a random feature subset per node from
    ``rng`` (random-forest style); None means all features.
    """

    def __init__(self, max_depth=None, min_leaf=5, max_features=None, rng=None):
        self.max_depth = max_depth
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.rng = rng
        self.root = None
        self.importance_ = None

    def fit(self, X, y):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        n, p = X.shape
        self.importance_ = np.zeros(p)
        self._p = p
        self.root = self._build(X, y, np.arange(n, dtype=np.int64), depth=0)
        return self

    def _candidate_features(self):
        p = self._p
        if self.max_features is None or self.max_features >= p:
            return np.arange(p, dtype=np.int64)
        chosen = self.rng.choice(p, size=self.max_features, replace=False)
        return np.sort(chosen).astype(np.int64)

    def _build(self, X, y, idx, depth):
        node = _Node(value=float(y[idx].mean()))
        if self.max_depth is not None and depth >= self.max_depth:
            return node
        if idx.shape[0] < 2 * self.min_leaf:
            return node
        feats = self._candidate_features()
        f, thr, gain = best_split(X, y, idx, feats, self.min_leaf)
        if f < 0:
            return node
        mask = X[idx, f] <= thr
        # midpoint can round onto a data value, emptying one side
        if not mask.any() or mask.all():
            return node
        self.importance_[f] += gain
        node.feature = f
        node.threshold = thr
        node.left = self._build(X, y, idx[mask], depth + 1)
        node.right = self._build(X, y, idx[~mask], depth + 1)
        return node

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = np.empty(X.shape[0])
        self._predict_into(self.root, X, np.arange(X.shape[0]), out)
        return out

    def _predict_into(self, node, X, idx, out):
        if node.feature < 0:
            out[idx] = node.value
            return
        mask = X[idx, node.feature] <= node.threshold
        self._predict_into(node.left, X, idx[mask], out)
        self._predict_into(node.right, X, idx[~mask], out)
