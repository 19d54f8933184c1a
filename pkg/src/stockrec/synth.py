"""Synthetic dataset generator with a planted linear factor signal.

Returns are generated as r = b0 + sum_j b_j * X_j + eps from the factor
values the pipeline itself computes, and prices are anchored so that the
forward log return between consecutive trade dates recovers r exactly.
truth.json records the planted coefficients and the true top-quintile set
per sector-quarter.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .factors import compute_factors
from .ingest import (
    GICS_SECTORS,
    FundamentalRecord,
    PriceSeries,
    UniverseCalendar,
    add_quarters,
    quarter_end,
    save_fundamentals,
    save_prices,
    save_universe,
)
from .recommender import pick_top
from .scheduler import (
    first_trading_day_on_or_after,
    nominal_trade_date,
    weekday_trading_days,
)

DEFAULT_BETA = {"ROA": 3.0, "NPM": 0.8, "GPM": 0.2}
DEFAULT_INTERCEPT = 0.01


@dataclass
class SynthConfig:
    n_sectors: int = 2
    stocks_per_sector: int = 12
    quarters: int = 26
    beta: dict = field(default_factory=lambda: dict(DEFAULT_BETA))
    intercept: float = DEFAULT_INTERCEPT
    noise_sigma: float = 0.005
    price_vol: float = 0.01
    missing_rate: float = 0.0
    start: date = date(1995, 1, 1)
    seed: int = 12345

    def __post_init__(self):
        if self.n_sectors < 1 or self.stocks_per_sector < 1 or self.quarters < 1:
            raise ValidationError("synth counts must be positive")
        if self.noise_sigma < 0 or self.price_vol < 0:
            raise ValidationError("noise_sigma and price_vol must be nonnegative")


def _draw_fields(rng, traits, prev):
    """One quarter of raw accounting values for a ticker."""
    assets = traits["assets"] * math.exp(rng.normal(0, 0.02))
    revenue = assets * traits["rev_rate"] * math.exp(rng.normal(0, 0.05))
    npm = traits["npm"] + rng.normal(0, 0.02)
    gpm = np.clip(traits["gpm"] + rng.normal(0, 0.03), 0.05, 0.9)
    om = npm + rng.normal(0.03, 0.01)
    net_income = revenue * npm
    cogs = revenue * (1.0 - gpm)
    fields = {
        "revenue": revenue,
        "net_income": net_income,
        "total_assets": assets,
        "equity": assets * traits["equity_rate"],
        "current_assets": assets * traits["ca_rate"],
        "current_liabilities": assets * traits["cl_rate"],
        "inventory": assets * traits["ca_rate"] * traits["inv_rate"],
        "cash": assets * traits["cash_rate"],
        "long_term_debt": assets * traits["ltd_rate"],
        "operating_cash_flow": net_income * 1.2 + assets * 0.01,
        "shares_outstanding": traits["shares"],
        "cogs": cogs,
        "accounts_payable": cogs * traits["ap_rate"],
        "operating_income": revenue * om,
        "ebitda": revenue * om * 1.25 + assets * 0.005,
        "total_debt": assets * traits["ltd_rate"] * 1.2,
        "dividends": max(net_income * 0.3, 0.0),
    }
    return fields


def _ticker_traits(rng):
    return {
        "assets": float(np.exp(rng.normal(np.log(5000.0), 0.8))),
        "rev_rate": float(rng.uniform(0.15, 0.35)),
        "npm": float(rng.normal(0.08, 0.04)),
        "gpm": float(rng.uniform(0.2, 0.6)),
        "equity_rate": float(rng.uniform(0.3, 0.6)),
        "ca_rate": float(rng.uniform(0.2, 0.4)),
        "cl_rate": float(rng.uniform(0.1, 0.2)),
        "inv_rate": float(rng.uniform(0.1, 0.4)),
        "cash_rate": float(rng.uniform(0.05, 0.15)),
        "ltd_rate": float(rng.uniform(0.1, 0.3)),
        "ap_rate": float(rng.uniform(0.1, 0.3)),
        "shares": float(rng.uniform(50.0, 500.0)),
    }


def _bridge(rng, n_steps, vol):
    """Log-price Brownian bridge increments pinned to zero at both ends."""
    if n_steps <= 1:
        return np.zeros(max(n_steps - 1, 0))
    w = np.concatenate([[0.0], np.cumsum(rng.normal(0, vol, n_steps - 1))])
    t = np.arange(n_steps) / (n_steps - 1)
    return w - t * w[-1]


def generate(config: SynthConfig, out_dir):
    """Write fundamentals.csv, prices.csv, universe.csv, truth.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)

    sectors = list(GICS_SECTORS[: config.n_sectors])
    quarters = [add_quarters(config.start, k) for k in range(config.quarters)]
    data_start = quarters[0]
    # extend past the final quarter's trade date so its return is realizable
    data_end = nominal_trade_date(add_quarters(quarters[-1], 1)) + timedelta(days=10)
    trading_days = weekday_trading_days(data_start, data_end)

    obs_days = []
    for q in quarters:
        d = first_trading_day_on_or_after(nominal_trade_date(q), trading_days)
        obs_days.append(d)
    # one extra anchor past the last quarter so its return is realizable
    extra = first_trading_day_on_or_after(
        nominal_trade_date(add_quarters(quarters[-1], 1)), trading_days
    )
    anchors_all = obs_days + ([extra] if extra is not None else [])

    records = []
    price_map = {}
    truth_beta = {}
    truth_top = {}
    true_scores = {}

    for sector in sectors:
        beta = dict(config.beta)
        truth_beta[str(sector)] = {"intercept": config.intercept, "coef": beta}
        truth_top[str(sector)] = {}
        for i in range(config.stocks_per_sector):
            ticker = f"S{sector:02d}N{i:02d}"
            traits = _ticker_traits(rng)
            release_lags = rng.integers(35, 56, size=config.quarters)
            s_anchor = [float(np.exp(rng.normal(np.log(50.0), 0.3)))]
            tick_records = []
            prev = None
            for k, q in enumerate(quarters):
                fields = _draw_fields(rng, traits, prev)
                prev = fields
                qe = quarter_end(q)
                rec = FundamentalRecord(
                    ticker=ticker,
                    sector=sector,
                    quarter_end=qe,
                    release_date=qe + timedelta(days=int(release_lags[k])),
                    fields=fields,
                )
                tick_records.append(rec)
                factors = compute_factors(rec, s_anchor[k], trailing=tick_records)
                signal = config.intercept + sum(
                    beta[f] * factors[f] for f in beta if factors[f] is not None
                )
                r = signal + rng.normal(0, config.noise_sigma)
                s_anchor.append(s_anchor[k] * math.exp(r))
                true_scores.setdefault((sector, q), []).append((ticker, signal))
                if config.missing_rate > 0:
                    for name in fields:
                        if rng.random() < config.missing_rate:
                            fields[name] = None
            records.extend(tick_records)

            # daily path: log-linear between anchors plus a pinned bridge
            anchor_days = anchors_all[: len(s_anchor)]
            all_days = sorted(d for d in trading_days if d <= anchor_days[-1])
            log_px = np.empty(len(all_days))
            day_idx = {d: i for i, d in enumerate(all_days)}
            a_idx = [day_idx[d] for d in anchor_days]
            # pre-anchor history: backward random walk from the first anchor
            lp0 = math.log(s_anchor[0])
            steps = a_idx[0]
            walk = np.cumsum(rng.normal(0, config.price_vol, steps)) if steps else np.zeros(0)
            for i in range(steps):
                log_px[steps - 1 - i] = lp0 + walk[i]
            for seg in range(len(a_idx) - 1):
                lo, hi = a_idx[seg], a_idx[seg + 1]
                la, lb = math.log(s_anchor[seg]), math.log(s_anchor[seg + 1])
                n_seg = hi - lo + 1
                base = np.linspace(la, lb, n_seg)
                log_px[lo : hi + 1] = base + _bridge(rng, n_seg, config.price_vol)
            price_map[ticker] = PriceSeries(
                ticker=ticker,
                dates=tuple(all_days),
                prices=tuple(np.exp(log_px).tolist()),
            )

        for q in quarters:
            picks = pick_top(true_scores[(sector, q)], 0.2)
            truth_top[str(sector)][q.isoformat()] = sorted(t for t, _ in picks)

    universe_members = {}
    for k in range(config.quarters + 3):
        q = add_quarters(config.start, k)
        universe_members[q] = {
            f"S{s:02d}N{i:02d}" for s in sectors for i in range(config.stocks_per_sector)
        }
    cal = UniverseCalendar(universe_members)

    save_fundamentals(records, out / "fundamentals.csv")
    save_prices(price_map, out / "prices.csv")
    save_universe(cal, out / "universe.csv")
    truth = {
        "beta": truth_beta,
        "noise_sigma": config.noise_sigma,
        "top_quintile": truth_top,
        "data_start": data_start.isoformat(),
        "data_end": data_end.isoformat(),
        "seed": config.seed,
    }
    with open(out / "truth.json", "w") as fh:
        json.dump(truth, fh, indent=2, sort_keys=True)
    return truth
