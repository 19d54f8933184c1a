"""End-to-end orchestration: ingest -> factors -> scheduler -> recommender ->
allocation -> backtest, plus all file outputs."""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import numpy as np

from . import allocation as alloc
from . import backtest as bt
from .config import RunConfig
from .errors import DataError, ValidationError
from .factors import build_panel, compute_factor_table, panel_to_csv
from .ingest import (
    add_quarters,
    clean_missing,
    load_fundamentals,
    load_prices,
    load_universe,
)
from .models import FAMILIES, ModelSpec
from .recommender import SHORT_NAMES, recommend
from .scheduler import (
    build_calendar,
    calendar_to_csv,
    first_trading_day_on_or_after,
    nominal_trade_date,
)

logger = logging.getLogger(__name__)


def _model_seed(base_seed, event_index, sector, family_index):
    ss = np.random.SeedSequence([base_seed, event_index, sector, family_index])
    return int(ss.generate_state(1)[0])


def _spec_factory(config, event_index):
    def factory(sector):
        specs = []
        for fi, family in enumerate(FAMILIES):
            hp = dict(config.model_overrides.get(family, {}))
            specs.append(
                ModelSpec(
                    family=family,
                    hyperparameters=hp,
                    seed=_model_seed(config.seed, event_index, sector, fi),
                )
            )
        return specs

    return factory


def run(config: RunConfig, out_dir):
    """Execute the full pipeline and write every output file into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    records = load_fundamentals(config.fundamentals)
    prices = load_prices(config.prices)
    universe = load_universe(config.universe)
    if not records or not prices:
        raise DataError("empty fundamentals or prices input")

    trading_days = {d for s in prices.values() for d in s.dates}
    start = config.start or min(trading_days)
    end = config.end or max(trading_days)

    calendar = build_calendar(
        start, end, trading_days, config.min_train_quarters, config.max_train_quarters
    )
    if not calendar.events:
        raise ValidationError("calendar produced no rebalance events")
    calendar_to_csv(calendar, out / "calendar.csv")

    def obs_date_fn(q):
        d = first_trading_day_on_or_after(nominal_trade_date(q), trading_days)
        if d is None:
            raise DataError(f"no trading day found for quarter {q}")
        return d

    by_sector = {}
    for rec in records:
        by_sector.setdefault(rec.sector, {}).setdefault(rec.ticker, []).append(rec)
    for sector in by_sector:
        for ticker in by_sector[sector]:
            by_sector[sector][ticker].sort(key=lambda r: r.quarter_end)

    quarters_used = sorted(
        {q for ev in calendar.events for q in (*ev.training_quarters, *ev.test_quarters, ev.quarter)}
    )

    sector_tables = {}
    sector_meta = {}
    sector_panels = {}
    for sector in sorted(by_sector):
        table, meta = compute_factor_table(
            sector, quarters_used, by_sector[sector], prices, universe, obs_date_fn
        )
        if not table:
            logger.warning("sector %s: no factor rows; skipped", sector)
            continue
        try:
            cleaned, clean_report = clean_missing(table, sector)
            panel = build_panel(sector, quarters_used, cleaned, prices, obs_date_fn)
        except DataError as exc:
            logger.warning("sector %s skipped: %s", sector, exc)
            continue
        sector_tables[sector] = cleaned
        sector_meta[sector] = meta
        sector_panels[sector] = panel
    if not sector_panels:
        raise DataError("no sector produced a usable factor panel")
    panel_to_csv([sector_panels[s] for s in sorted(sector_panels)], out / "panel.csv")

    all_recs = []
    all_sel = []
    audit_rows = []
    for ev in calendar.events:
        sector_current = {}
        for sector, cleaned in sector_tables.items():
            names = sector_panels[sector].factor_names
            tickers = sorted(t for (t, q) in cleaned if q == ev.quarter)
            if not tickers:
                continue
            X = np.array(
                [[cleaned[(t, ev.quarter)][f] for f in names] for t in tickers], dtype=float
            )
            sector_current[sector] = (tickers, X)
        recs, sels = recommend(
            ev,
            sector_panels,
            sector_current,
            _spec_factory(config, ev.index),
            pick_fraction=config.pick_fraction,
        )
        all_recs.extend(recs)
        all_sel.extend(sels)

        for sector, panel in sector_panels.items():
            meta = sector_meta[sector]
            for role, quarters in (("train", ev.training_quarters), ("test", ev.test_quarters)):
                qset = set(quarters)
                for row in panel.rows:
                    if row.quarter not in qset:
                        continue
                    m = meta.get((row.ticker, row.quarter), {})
                    audit_rows.append(
                        {
                            "event_index": ev.index,
                            "trade_date": ev.trade_date,
                            "role": role,
                            "sector": sector,
                            "ticker": row.ticker,
                            "quarter": row.quarter,
                            "release_date": m.get("release_date"),
                            "realization_date": obs_date_fn(add_quarters(row.quarter, 1)),
                        }
                    )

    _write_selection_log(all_sel, out / "selection_log.csv")
    _write_recommendations(all_recs, out / "recommendations.csv")
    _write_audit_rows(audit_rows, out / "audit_rows.csv")

    recs_by_date = {}
    for rec in all_recs:
        recs_by_date.setdefault(rec.trade_date, []).append(rec)

    weights_by_method = {m: {} for m in config.methods}
    for ev in calendar.events:
        day_recs = recs_by_date.get(ev.trade_date)
        if not day_recs:
            logger.warning("event %s produced no recommendations", ev.trade_date)
            continue
        picks = {}
        for rec in day_recs:
            for ticker, pred in rec.picks:
                picks[ticker] = pred
        tickers = tuple(sorted(picks))
        mu = np.array([picks[t] for t in tickers])
        n = len(tickers)
        ub = max(config.ub_base, 1.0 / n)
        if n == 1:
            for m in config.methods:
                weights_by_method[m][ev.trade_date] = alloc.equal_weights(tickers)
            continue
        sigma = alloc.estimate_covariance(prices, tickers, ev.trade_date)
        inp = alloc.AllocationInput(tickers=tickers, mu=mu, sigma=alloc._nearest_psd(sigma), rf=config.rf)
        for m in config.methods:
            if m == "equal":
                weights_by_method[m][ev.trade_date] = alloc.equal_weights(tickers)
            elif m == "min_variance":
                weights_by_method[m][ev.trade_date] = alloc.min_variance(inp, ub=ub)
            else:
                weights_by_method[m][ev.trade_date] = alloc.max_sharpe(inp, ub=ub)

    _write_weights(weights_by_method, out / "weights.csv")

    report = {"seed": config.seed, "rf": config.rf, "methods": {}}
    curve_rows = []
    blotter_rows = []
    for m in config.methods:
        if not weights_by_method[m]:
            logger.warning("method %s has no weights; skipped", m)
            continue
        curve, blotter, perf = bt.run_backtest(
            calendar,
            weights_by_method[m],
            prices,
            trading_days,
            end_date=end,
            initial_value=config.initial_value,
            cost_rate=config.cost_rate,
            rf=config.rf,
        )
        report["methods"][m] = perf.as_dict()
        if config.in_sample_boundary is not None:
            cut = [i for i, d in enumerate(curve.dates) if d <= config.in_sample_boundary]
            if len(cut) >= 2:
                sub = bt.EquityCurve(
                    dates=curve.dates[: cut[-1] + 1], values=curve.values[: cut[-1] + 1]
                )
                report["methods"][m]["in_sample"] = bt.metrics(sub, config.rf).as_dict()
        curve_rows.extend((d, m, v) for d, v in zip(curve.dates, curve.values))
        blotter_rows.extend((r.date, m, r.ticker, r.share_delta, r.price, r.cost) for r in blotter)

    _write_curves(curve_rows, out / "equity_curve.csv")
    _write_blotter(blotter_rows, out / "blotter.csv")
    with open(out / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
    return report


def _write_selection_log(records, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["trade_date", "sector", "mse_ols", "mse_ridge", "mse_step", "mse_rf", "mse_gbm", "chosen", "fallback_used"]
        )
        for sel in sorted(records, key=lambda s: (s.trade_date, s.sector)):
            mse = {SHORT_NAMES[s.family]: s.mse for s in sel.scores}
            writer.writerow(
                [
                    sel.trade_date.isoformat(),
                    sel.sector,
                    repr(mse["ols"]),
                    repr(mse["ridge"]),
                    repr(mse["step"]),
                    repr(mse["rf"]),
                    repr(mse["gbm"]),
                    SHORT_NAMES[sel.chosen],
                    int(sel.fallback_used),
                ]
            )


def _write_recommendations(recs, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trade_date", "sector", "ticker", "predicted_return", "model_used"])
        for rec in sorted(recs, key=lambda r: (r.trade_date, r.sector)):
            for ticker, pred in rec.picks:
                writer.writerow(
                    [rec.trade_date.isoformat(), rec.sector, ticker, repr(pred), SHORT_NAMES[rec.model_used]]
                )


def _write_weights(weights_by_method, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["trade_date", "method", "ticker", "weight"])
        for method in sorted(weights_by_method):
            for d in sorted(weights_by_method[method]):
                pw = weights_by_method[method][d]
                for ticker, w in zip(pw.tickers, pw.weights):
                    writer.writerow([d.isoformat(), method, ticker, repr(float(w))])


def _write_curves(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "method", "value"])
        for d, m, v in sorted(rows, key=lambda r: (r[1], r[0])):
            writer.writerow([d.isoformat(), m, repr(float(v))])


def _write_blotter(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "method", "ticker", "share_delta", "price", "cost"])
        for d, m, t, sd, p, c in sorted(rows, key=lambda r: (r[1], r[0], r[2])):
            writer.writerow([d.isoformat(), m, t, repr(float(sd)), repr(float(p)), repr(float(c))])


def _write_audit_rows(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["event_index", "trade_date", "role", "sector", "ticker", "quarter", "release_date", "realization_date"]
        )
        for r in rows:
            writer.writerow(
                [
                    r["event_index"],
                    r["trade_date"].isoformat(),
                    r["role"],
                    r["sector"],
                    r["ticker"],
                    r["quarter"].isoformat(),
                    r["release_date"].isoformat() if r["release_date"] else "",
                    r["realization_date"].isoformat(),
                ]
            )
