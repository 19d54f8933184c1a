"""Gradient-boosted regression trees (squared-error loss, shrinkage, subsampling)."""

from __future__ import annotations

import numpy as np

from .trees import RegressionTree


class GradientBoosting:
    """Stagewise boosting of shallow trees on residuals.

    ``cv_folds >= 2`` selects the stage count by cross-validation (the stage
    grid is 1..n_stages, scored by mean held-out MSE); ``cv_folds`` of 0 or 1
    uses all ``n_stages`` stages.
    """

    def __init__(
        self,
        n_stages=1000,
        learning_rate=0.1,
        max_depth=3,
        subsample=0.5,
        min_leaf=10,
        cv_folds=5,
        seed=0,
    ):
        self.n_stages = n_stages
        self.learning_rate = learning_rate
        self.max_depth = max_depth
        self.subsample = subsample
        self.min_leaf = min_leaf
        self.cv_folds = cv_folds
        self.seed = seed
        self.trees = []
        self.init_value = 0.0
        self.n_stages_used = 0
        self.importance_ = None

    def _boost(self, X, y, n_stages, rng, X_val=None, y_val=None):
        """One boosting run; returns (trees, per-stage validation MSE)."""
        n = X.shape[0]
        init = float(y.mean())
        pred = np.full(n, init)
        val_mse = []
        val_pred = None if X_val is None else np.full(X_val.shape[0], init)
        trees = []
        n_sub = max(1, int(round(self.subsample * n)))
        for _ in range(n_stages):
            resid = y - pred
            idx = np.sort(rng.choice(n, size=n_sub, replace=False))
            tree = RegressionTree(max_depth=self.max_depth, min_leaf=self.min_leaf)
            tree.fit(X[idx], resid[idx])
            pred += self.learning_rate * tree.predict(X)
            trees.append(tree)
            if X_val is not None:
                val_pred += self.learning_rate * tree.predict(X_val)
                err = y_val - val_pred
                val_mse.append(float(err @ err) / len(y_val))
        return init, trees, val_mse

    def fit(self, X, y):
        X = np.ascontiguousarray(X, dtype=np.float64)
        y = np.ascontiguousarray(y, dtype=np.float64)
        n, p = X.shape
        children = np.random.SeedSequence(self.seed).spawn(self.cv_folds + 2)
        n_best = self.n_stages
        if self.cv_folds >= 2 and n >= self.cv_folds:
            fold_seeds = children
            shuffle_rng = np.random.default_rng(fold_seeds[0])
            folds = np.array_split(shuffle_rng.permutation(n), self.cv_folds)
            curves = np.zeros((self.cv_folds, self.n_stages))
            for fi, hold in enumerate(folds):
                train = np.setdiff1d(np.arange(n), hold)
                rng = np.random.default_rng(fold_seeds[fi + 1])
                _, _, val_mse = self._boost(
                    X[train], y[train], self.n_stages, rng, X_val=X[hold], y_val=y[hold]
                )
                curves[fi] = val_mse
            n_best = int(np.argmin(curves.mean(axis=0))) + 1
        final_rng = np.random.default_rng(children[-1])
        self.init_value, self.trees, _ = self._boost(X, y, n_best, final_rng)
        self.n_stages_used = n_best
        self.importance_ = np.zeros(p)
        for tree in self.trees:
            self.importance_ += tree.importance_
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        acc = np.full(X.shape[0], self.init_value)
        for tree in self.trees:
            acc += self.learning_rate * tree.predict(X)
        return acc
