"""The five estimator families: fit, predict, MSE scoring, and inspection."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ValidationError
from .forest import RandomForest
from .gbm import GradientBoosting
from .linear import ols_fit, ridge_fit, stepwise_fit

FAMILIES = ("ols", "ridge", "stepwise_aic", "random_forest", "gbm")

# argmin tie-break priority for model selection
FAMILY_PRIORITY = ("ols", "ridge", "stepwise_aic", "random_forest", "gbm")

DEFAULT_HYPERPARAMETERS = {
    "ols": {},
    "ridge": {
        "lambda": None,  # None -> choose by CV over the grid
        "lambda_grid_min": 1e-4,
        "lambda_grid_max": 1e2,
        "lambda_grid_points": 25,
        "cv_folds": 5,
        "standardize": True,
    },
    "stepwise_aic": {},
    "random_forest": {
        "n_trees": 500,
        "min_leaf": 5,
        "max_features": None,  # None -> floor(p / 3)
        "bootstrap": True,
    },
    "gbm": {
        "n_stages": 1000,
        "learning_rate": 0.1,
        "max_depth": 3,
        "subsample": 0.5,
        "min_leaf": 10,
        "cv_folds": 5,
    },
}


@dataclass(frozen=True)
class ModelSpec:
    family: str
    hyperparameters: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown model family {self.family!r}")

    def resolved(self) -> dict:
        hp = dict(DEFAULT_HYPERPARAMETERS[self.family])
        unknown = set(self.hyperparameters) - set(hp) if hp else set(self.hyperparameters)
        if unknown:
            raise ValidationError(f"{self.family}: unknown hyperparameters {sorted(unknown)}")
        hp.update(self.hyperparameters)
        return hp


@dataclass
class FittedModel:
    spec: ModelSpec
    factor_names: tuple
    intercept: float | None
    coef: np.ndarray | None       # linear families, aligned to factor_names
    estimator: object | None      # tree families
    importances: dict             # coefficients or normalized importance scores
    n_rows: int
    residual_variance: float
    extra: dict = field(default_factory=dict)


def _tree_importances(names, raw):
    total = float(raw.sum())
    if total > 0:
        scores = 100.0 * raw / total
    else:
        scores = np.zeros_like(raw)
    return {n: float(s) for n, s in zip(names, scores)}


def fit(spec: ModelSpec, X, y, factor_names=None) -> FittedModel:
    """Fit one estimator family; deterministic given (spec.seed, X, y)."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValidationError(f"X {X.shape} and y {y.shape} are inconsistent")
    if np.isnan(X).any() or np.isnan(y).any():
        raise ValidationError("missing cells must be cleaned before fitting")
    n, p = X.shape
    if factor_names is None:
        factor_names = tuple(f"x{j}" for j in range(p))
    factor_names = tuple(factor_names)
    if len(factor_names) != p:
        raise ValidationError(f"{len(factor_names)} factor names for {p} columns")
    hp = spec.resolved()

    if spec.family == "ols":
        intercept, coef, rss = ols_fit(X, y)
        selected = list(range(p))
    elif spec.family == "ridge":
        grid = np.logspace(
            np.log10(hp["lambda_grid_min"]),
            np.log10(hp["lambda_grid_max"]),
            hp["lambda_grid_points"],
        )
        intercept, coef, rss, lam = ridge_fit(
            X,
            y,
            lam=hp["lambda"],
            lambda_grid=grid,
            cv_folds=hp["cv_folds"],
            standardize=hp["standardize"],
            seed=spec.seed,
        )
        selected = list(range(p))
    elif spec.family == "stepwise_aic":
        intercept, coef, rss, selected, aic_path = stepwise_fit(X, y)
    elif spec.family == "random_forest":
        est = RandomForest(
            n_trees=hp["n_trees"],
            min_leaf=hp["min_leaf"],
            max_features=hp["max_features"],
            bootstrap=hp["bootstrap"],
            seed=spec.seed,
        ).fit(X, y)
    else:  # gbm
        est = GradientBoosting(
            n_stages=hp["n_stages"],
            learning_rate=hp["learning_rate"],
            max_depth=hp["max_depth"],
            subsample=hp["subsample"],
            min_leaf=hp["min_leaf"],
            cv_folds=hp["cv_folds"],
            seed=spec.seed,
        ).fit(X, y)

    if spec.family in ("ols", "ridge", "stepwise_aic"):
        importances = {"(Intercept)": float(intercept)}
        for j in selected:
            importances[factor_names[j]] = float(coef[j])
        k = len(selected) + 1
        model = FittedModel(
            spec=spec,
            factor_names=factor_names,
            intercept=float(intercept),
            coef=np.asarray(coef, dtype=float),
            estimator=None,
            importances=importances,
            n_rows=n,
            residual_variance=rss / max(n - k, 1),
        )
        if spec.family == "ridge":
            model.extra["lambda"] = lam
        if spec.family == "stepwise_aic":
            model.extra["selected"] = selected
            model.extra["aic_path"] = aic_path
        return model

    resid = y - est.predict(X)
    return FittedModel(
        spec=spec,
        factor_names=factor_names,
        intercept=None,
        coef=None,
        estimator=est,
        importances=_tree_importances(factor_names, est.importance_),
        n_rows=n,
        residual_variance=float(resid @ resid) / n,
    )


def predict(model: FittedModel, X, factor_names=None):
    """Predict returns for rows of X (columns must match training order)."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(model.factor_names):
        raise ValidationError(
            f"X has {X.shape[1] if X.ndim == 2 else '?'} columns, "
            f"model expects {len(model.factor_names)}"
        )
    if factor_names is not None and tuple(factor_names) != model.factor_names:
        missing = sorted(set(model.factor_names) - set(factor_names))
        extra = sorted(set(factor_names) - set(model.factor_names))
        raise ValidationError(f"factor columns mismatch: missing {missing}, extra {extra}")
    if model.estimator is not None:
        return model.estimator.predict(X)
    return model.intercept + X @ model.coef


def mse(predicted, realized) -> float:
    predicted = np.asarray(predicted, dtype=float)
    realized = np.asarray(realized, dtype=float)
    if predicted.shape != realized.shape or predicted.size == 0:
        raise ValidationError(
            f"mse needs equal-length nonempty vectors (got {predicted.shape} vs {realized.shape})"
        )
    d = predicted - realized
    return float(d @ d) / predicted.size


def inspect(model: FittedModel):
    """Coefficient / importance table, sorted by value descending."""
    return sorted(model.importances.items(), key=lambda kv: (-kv[1], kv[0]))


def model_to_json(model: FittedModel) -> dict:
    """Summary dump: enough to reproduce the inspect table, not the ensemble."""
    out = {
        "family": model.spec.family,
        "hyperparameters": model.spec.resolved(),
        "seed": model.spec.seed,
        "factor_names": list(model.factor_names),
        "n_rows": model.n_rows,
        "residual_variance": model.residual_variance,
        "importances": model.importances,
    }
    if model.intercept is not None:
        out["intercept"] = model.intercept
        out["coefficients"] = {n: float(c) for n, c in zip(model.factor_names, model.coef)}
    else:
        est = model.estimator
        out["ensemble"] = {
            "n_trees": len(est.trees),
            "type": type(est).__name__,
        }
    for key, val in model.extra.items():
        if key != "aic_path":
            out[key] = val
    return out
