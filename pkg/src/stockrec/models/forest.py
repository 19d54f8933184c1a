"""Seeded random-forest regressor (bootstrap + per-node feature subsets)."""

from __future__ import annotations

import numpy as np

from .trees import RegressionTree


class RandomForest:
    def __init__(self, n_trees=500, min_leaf=5, max_features=None, bootstrap=True, seed=0):
        self.n_trees = n_trees
        self.min_leaf = min_leaf
        self.max_features = max_features
        self.bootstrap = bootstrap
        self.seed = seed
        self.trees = []
        self.importance_ = None

    def fit(self, X, y):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        n, p = X.shape
        mtry = self.max_features if self.max_features is not None else max(1, p // 3)
        self.trees = []
        self.importance_ = np.zeros(p)
        # per-tree generators derived from the spec seed keep refits bit-identical
        seeds = np.random.SeedSequence(self.seed).spawn(self.n_trees)
        for ss in seeds:
            rng = np.random.default_rng(ss)
            if self.bootstrap:
                idx = rng.integers(0, n, size=n)
            else:
                idx = np.arange(n)
            tree = RegressionTree(min_leaf=self.min_leaf, max_features=mtry, rng=rng)
            tree.fit(X[idx], y[idx])
            self.trees.append(tree)
            self.importance_ += tree.importance_
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        acc = np.zeros(X.shape[0])
        for tree in self.trees:
            acc += tree.predict(X)
        return acc / len(self.trees)
