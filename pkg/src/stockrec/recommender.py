"""Per-sector model scoring, minimum-MSE selection, top-20% picking, and the
abnormal-result check."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from datetime import date

import numpy as np

from . import models
from .errors import ValidationError
from .factors import FactorPanel
from .models import FAMILY_PRIORITY, FittedModel, ModelSpec

logger = logging.getLogger(__name__)

SHORT_NAMES = {
    "ols": "ols",
    "ridge": "ridge",
    "stepwise_aic": "step",
    "random_forest": "rf",
    "gbm": "gbm",
}


@dataclass(frozen=True)
class ModelScore:
    family: str
    mse: float


@dataclass(frozen=True)
class SelectionRecord:
    trade_date: date
    sector: int
    scores: tuple            # five ModelScore
    chosen: str
    indicator: dict          # family -> 0/1
    fallback_used: bool = False


@dataclass(frozen=True)
class Recommendation:
    trade_date: date
    sector: int
    picks: tuple             # (ticker, predicted return), sorted descending
    model_used: str


def score_models(panel_train: FactorPanel, panel_test: FactorPanel, specs):
    """Fit every family on the train panel and score it on the test panel.

    Returns (scores, fitted) where scores is a list of ModelScore in spec
    order and fitted maps family -> FittedModel.
    """
    if not panel_train.rows or not panel_test.rows:
        raise ValidationError("score_models requires nonempty train and test panels")
    if panel_train.factor_names != panel_test.factor_names:
        raise ValidationError("train/test factor columns disagree")
    X_tr, y_tr, _ = panel_train.matrix()
    X_te, y_te, _ = panel_test.matrix()
    scores = []
    fitted = {}
    for spec in specs:
        try:
            model = models.fit(spec, X_tr, y_tr, factor_names=panel_train.factor_names)
        except Exception as exc:
            raise type(exc)(f"[{spec.family}] {exc}") from exc
        pred = models.predict(model, X_te)
        scores.append(ModelScore(family=spec.family, mse=models.mse(pred, y_te)))
        fitted[spec.family] = model
    return scores, fitted


def select_model(scores) -> str:
    """Lowest-MSE family; ties broken by the fixed priority order."""
    by_family = {s.family: s.mse for s in scores}
    for fam, v in by_family.items():
        if math.isnan(v):
            raise ValidationError(f"NaN MSE for family {fam}")
    ranked = sorted(by_family, key=lambda f: (by_family[f], FAMILY_PRIORITY.index(f)))
    return ranked[0]


def pick_top(predictions, fraction: float = 0.2):
    """Top fraction of tickers by predicted return.

    Count is max(1, round-half-up(fraction * n)); ties on predicted return
    break lexicographically by ticker; output sorted descending.
    """
    if not predictions:
        raise ValidationError("pick_top requires at least one prediction")
    if not 0 < fraction <= 1:
        raise ValidationError(f"fraction must be in (0, 1], got {fraction}")
    n = len(predictions)
    count = max(1, math.floor(fraction * n + 0.5))
    ordered = sorted(predictions, key=lambda tp: (-tp[1], tp[0]))
    return ordered[:count]


def sanity_check(model: FittedModel, X_test=None):
    """Returns (True, None) when the fit looks usable, else (False, reason)."""
    values = np.array(list(model.importances.values()), dtype=float)
    if not np.isfinite(values).all():
        return False, "non-finite coefficient or importance"
    if np.all(values == 0):
        return False, "all coefficients/importances are zero"
    if X_test is not None:
        X_test = np.asarray(X_test, dtype=float)
        if len(X_test) > 1 and not np.all(X_test == X_test[0]):
            pred = models.predict(model, X_test)
            if np.all(pred == pred[0]):
                return False, "constant predictions on non-constant inputs"
    return True, None


def recommend(event, sector_panels, sector_current, spec_factory, pick_fraction=0.2):
    """Run steps 1-4 for every sector of one rebalance event.

    sector_panels: {sector: FactorPanel over train+test quarters}
    sector_current: {sector: (tickers, X)} design rows for the traded quarter
    spec_factory: callable(sector) -> list of five ModelSpec

    Returns (recommendations, selection_records), ordered by sector code.
    """
    recommendations = []
    records = []
    for sector in sorted(sector_panels):
        panel = sector_panels[sector]
        train = panel.subset(event.training_quarters)
        test = panel.subset(event.test_quarters)
        current = sector_current.get(sector)
        if not train.rows or not test.rows or not current or not current[0]:
            logger.info(
                "event %s sector %s skipped: empty train/test/current data",
                event.trade_date,
                sector,
            )
            continue
        specs = spec_factory(sector)
        try:
            scores, fitted = score_models(train, test, specs)
        except Exception as exc:
            logger.warning("event %s sector %s skipped: %s", event.trade_date, sector, exc)
            continue
        tickers, X_cur = current
        X_te, _, _ = test.matrix()

        by_mse = sorted(
            scores, key=lambda s: (s.mse, FAMILY_PRIORITY.index(s.family))
        )
        chosen = by_mse[0].family
        fallback = False
        for cand in by_mse:
            ok, reason = sanity_check(fitted[cand.family], X_te)
            if ok:
                if cand.family != chosen:
                    logger.warning(
                        "event %s sector %s: %s failed sanity check, falling back to %s",
                        event.trade_date,
                        sector,
                        chosen,
                        cand.family,
                    )
                    fallback = True
                chosen = cand.family
                break
        else:
            logger.warning(
                "event %s sector %s: every model failed the sanity check; using argmin",
                event.trade_date,
                sector,
            )
            chosen = by_mse[0].family
            fallback = True

        preds = models.predict(fitted[chosen], X_cur)
        picks = pick_top(list(zip(tickers, preds.tolist())), pick_fraction)
        recommendations.append(
            Recommendation(
                trade_date=event.trade_date,
                sector=sector,
                picks=tuple(picks),
                model_used=chosen,
            )
        )
        records.append(
            SelectionRecord(
                trade_date=event.trade_date,
                sector=sector,
                scores=tuple(scores),
                chosen=chosen,
                indicator={s.family: int(s.family == chosen) for s in scores},
                fallback_used=fallback,
            )
        )
    return recommendations, records
