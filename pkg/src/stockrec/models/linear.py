"""OLS, ridge (CV over a lambda grid), and bidirectional stepwise-AIC fits."""

from __future__ import annotations

import numpy as np

from ..errors import ComputationError, ValidationError


def _design(X):
    return np.column_stack([np.ones(X.shape[0]), X])


def ols_fit(X, y):
    """Least squares with intercept. Returns (intercept, coef, rss)."""
    n, p = X.shape
    if n <= p:
        raise ValidationError(f"ols requires n > p (got n={n}, p={p}); need at least {p + 1} rows")
    Z = _design(X)
    beta, _, rank, _ = np.linalg.lstsq(Z, y, rcond=None)
    if rank < Z.shape[1]:
        raise ComputationError(
            f"design matrix is rank-deficient (rank {rank} < {Z.shape[1]}); consider ridge"
        )
    resid = y - Z @ beta
    return float(beta[0]), beta[1:].copy(), float(resid @ resid)


def _kfold_indices(n, folds, rng):
    idx = rng.permutation(n)
    return np.array_split(idx, folds)


def _ridge_solve(Xc, yc, lam):
    p = Xc.shape[1]
    return np.linalg.solve(Xc.T @ Xc + lam * np.eye(p), Xc.T @ yc)


def ridge_fit(X, y, lam=None, lambda_grid=None, cv_folds=5, standardize=True, seed=0):
    """Ridge regression with an unpenalized intercept.

    Features are standardized internally when ``standardize``; coefficients
    are reported on the original scale. When ``lam`` is None the penalty is
    chosen by k-fold cross-validation over ``lambda_grid``.
    Returns (intercept, coef, rss, chosen_lambda).
    """
    n, p = X.shape
    if lambda_grid is None:
        lambda_grid = np.logspace(-4, 2, 25)
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    if standardize:
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
    else:
        scale = np.ones(p)
    Z = (X - x_mean) / scale
    yc = y - y_mean

    if lam is None:
        rng = np.random.default_rng(seed)
        folds = _kfold_indices(n, min(cv_folds, n), rng)
        cv_mse = np.zeros(len(lambda_grid))
        for hold in folds:
            train = np.setdiff1d(np.arange(n), hold)
            Zt, yt = Z[train], yc[train]
            for li, lg in enumerate(lambda_grid):
                b = _ridge_solve(Zt, yt, lg)
                err = yc[hold] - Z[hold] @ b
                cv_mse[li] += float(err @ err)
        lam = float(lambda_grid[int(np.argmin(cv_mse))])

    b_std = _ridge_solve(Z, yc, lam)
    coef = b_std / scale
    intercept = float(y_mean - coef @ x_mean)
    resid = y - (intercept + X @ coef)
    return intercept, coef, float(resid @ resid), float(lam)


def aic(rss, n, k):
    """n*ln(RSS/n) + 2k, k counting the intercept."""
    return n * np.log(max(rss, 1e-300) / n) + 2 * k


def _subset_rss(X, y, cols):
    Z = _design(X[:, cols]) if cols else np.ones((X.shape[0], 1))
    beta, _, _, _ = np.linalg.lstsq(Z, y, rcond=None)
    resid = y - Z @ beta
    return float(resid @ resid)


def stepwise_fit(X, y):
    """Bidirectional stepwise selection under AIC, starting from the full model.

    Each accepted move strictly lowers AIC. Returns (intercept, coef, rss,
    selected column indices, aic_path).
    """
    n, p = X.shape
    if n <= p:
        raise ValidationError(f"stepwise requires n > p (got n={n}, p={p})")
    selected = list(range(p))
    current_aic = aic(_subset_rss(X, y, selected), n, len(selected) + 1)
    aic_path = [current_aic]
    while True:
        candidates = []
        for j in selected:
            cols = [c for c in selected if c != j]
            candidates.append((aic(_subset_rss(X, y, cols), n, len(cols) + 1), "drop", j))
        for j in range(p):
            if j in selected:
                continue
            cols = sorted(selected + [j])
            candidates.append((aic(_subset_rss(X, y, cols), n, len(cols) + 1), "add", j))
        if not candidates:
            break
        candidates.sort(key=lambda c: (c[0], c[1], c[2]))
        best_aic, move, j = candidates[0]
        if best_aic >= current_aic:
            break
        if move == "drop":
            selected.remove(j)
        else:
            selected.append(j)
            selected.sort()
        current_aic = best_aic
        aic_path.append(current_aic)

    if selected:
        intercept, sub_coef, rss = ols_fit(X[:, selected], y)
    else:
        intercept = float(y.mean())
        resid = y - intercept
        rss = float(resid @ resid)
        sub_coef = np.zeros(0)
    coef = np.zeros(p)
    for pos, j in enumerate(selected):
        coef[j] = sub_coef[pos]
    return intercept, coef, rss, list(selected), aic_path
