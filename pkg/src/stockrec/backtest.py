"""Trade simulation: share conversion, 0.1% transaction costs, daily
mark-to-market, and performance metrics."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date

import numpy as np

from .errors import DataError, ValidationError

logger = logging.getLogger(__name__)

COST_RATE = 0.001
TRADING_DAYS_PER_YEAR = 252


@dataclass
class Holdings:
    shares: dict = field(default_factory=dict)
    cash: float = 0.0


@dataclass(frozen=True)
class BlotterRow:
    date: date
    ticker: str
    share_delta: float
    price: float
    cost: float


@dataclass(frozen=True)
class EquityCurve:
    dates: tuple
    values: np.ndarray


@dataclass(frozen=True)
class PerformanceReport:
    start_value: float
    end_value: float
    total_return: float
    max_drawdown: float
    annualized_return: float
    annualized_std: float
    sharpe_ratio: float | None
    rf: float

    def as_dict(self):
        return {
            "start_value": self.start_value,
            "end_value": self.end_value,
            "total_return": self.total_return,
            "max_drawdown": self.max_drawdown,
            "annualized_return": self.annualized_return,
            "annualized_std": self.annualized_std,
            "sharpe_ratio": self.sharpe_ratio,
            "rf": self.rf,
        }


def price_asof(series, d: date):
    """Last observed price on or before d (carry-forward), or None."""
    idx = np.searchsorted(np.array(series.dates), d, side="right") - 1
    if idx < 0:
        return None
    return series.prices[idx]


def _require_price(prices, ticker, d):
    series = prices.get(ticker)
    if series is None:
        raise DataError(f"no price series for {ticker}")
    px = price_asof(series, d)
    if px is None:
        raise DataError(f"no price for {ticker} on or before {d}")
    return px


def rebalance(holdings: Holdings, targets, prices, d: date, cost_rate=COST_RATE):
    """Re-form the portfolio at target weights; one fixed-point pass on cost.

    ``targets`` is a PortfolioWeights; ``prices`` maps ticker -> PriceSeries.
    Tickers absent from the targets are fully sold. Returns (Holdings,
    blotter rows).
    """
    target_w = targets.as_dict()
    tickers = sorted(set(holdings.shares) | set(target_w))
    px = {t: _require_price(prices, t, d) for t in tickers}
    value = holdings.cash + sum(holdings.shares.get(t, 0.0) * px[t] for t in holdings.shares)

    def shares_for(investable):
        return {t: target_w[t] * investable / px[t] for t in target_w}

    naive = shares_for(value)
    cost_est = sum(
        abs(naive.get(t, 0.0) - holdings.shares.get(t, 0.0)) * px[t] * cost_rate for t in tickers
    )
    # one fixed-point pass on the cost estimate; extra passes only when a
    # sell-heavy rebalance leaves the cash marginally short
    for _ in range(10):
        final = shares_for(value - cost_est)
        cost = sum(
            abs(final.get(t, 0.0) - holdings.shares.get(t, 0.0)) * px[t] * cost_rate
            for t in tickers
        )
        new_cash = value - sum(final[t] * px[t] for t in final) - cost
        if new_cash >= 0.0:
            break
        cost_est += -new_cash * 1.5
    if new_cash < -1e-6:
        raise DataError(f"rebalance on {d} produced negative cash {new_cash:.6f}")

    blotter = []
    for t in tickers:
        delta = final.get(t, 0.0) - holdings.shares.get(t, 0.0)
        if delta == 0.0:
            continue
        row_cost = abs(delta) * px[t] * cost_rate
        blotter.append(BlotterRow(date=d, ticker=t, share_delta=delta, price=px[t], cost=row_cost))
    return Holdings(shares={t: s for t, s in final.items() if s > 0}, cash=max(new_cash, 0.0)), blotter


def mark_to_market(holdings: Holdings, prices, dates) -> EquityCurve:
    """Daily portfolio value cash + sum(shares * price) with carry-forward
    prices for single-day gaps."""
    values = []
    for d in dates:
        v = holdings.cash
        for t, s in holdings.shares.items():
            series = prices.get(t)
            if series is None:
                raise DataError(f"no price series for held ticker {t}")
            p = price_asof(series, d)
            if p is None:
                raise DataError(f"held ticker {t} has no price on or before {d}")
            v += s * p
        values.append(v)
    return EquityCurve(dates=tuple(dates), values=np.array(values))


def sharpe_ratio(annualized_return: float, annualized_std: float, rf: float):
    if annualized_std == 0:
        return None
    return (annualized_return - rf) / annualized_std


def metrics(curve: EquityCurve, rf: float) -> PerformanceReport:
    v = np.asarray(curve.values, dtype=float)
    if v.size < 2:
        raise ValidationError("metrics requires a curve of length >= 2")
    daily = v[1:] / v[:-1] - 1.0
    ann_ret = float(daily.mean()) * TRADING_DAYS_PER_YEAR
    ann_std = float(daily.std(ddof=1)) * np.sqrt(TRADING_DAYS_PER_YEAR) if daily.size > 1 else 0.0
    peak = np.maximum.accumulate(v)
    mdd = float((v / peak - 1.0).min())
    return PerformanceReport(
        start_value=float(v[0]),
        end_value=float(v[-1]),
        total_return=float(v[-1] / v[0] - 1.0),
        max_drawdown=mdd,
        annualized_return=ann_ret,
        annualized_std=ann_std,
        sharpe_ratio=sharpe_ratio(ann_ret, ann_std, rf),
        rf=rf,
    )


def run_backtest(
    calendar,
    weights_by_date,
    prices,
    trading_days,
    end_date: date,
    initial_value: float = 1_000_000.0,
    cost_rate: float = COST_RATE,
    rf: float = 0.015,
):
    """Hold each event's allocation from its trade date until the next.

    weights_by_date: {trade_date: PortfolioWeights}; events without weights
    are skipped with a log line. Returns (EquityCurve, blotter rows,
    PerformanceReport).
    """
    events = [ev for ev in calendar.events if ev.trade_date in weights_by_date]
    if not events:
        raise ValidationError("no rebalance events with weights to simulate")
    for ev in calendar.events:
        if ev.trade_date not in weights_by_date:
            logger.info("event %s has no weights; skipped", ev.trade_date)

    holdings = Holdings(shares={}, cash=initial_value)
    all_days = sorted(d for d in trading_days if events[0].trade_date <= d <= end_date)
    if not all_days:
        raise ValidationError("no trading days in the simulation range")

    blotter = []
    dates_out = []
    values_out = []
    next_event = 0
    for d in all_days:
        if next_event < len(events) and d >= events[next_event].trade_date:
            ev = events[next_event]
            holdings, rows = rebalance(
                holdings, weights_by_date[ev.trade_date], prices, d, cost_rate
            )
            blotter.extend(rows)
            next_event += 1
        day_curve = mark_to_market(holdings, prices, [d])
        dates_out.append(d)
        values_out.append(float(day_curve.values[0]))

    curve = EquityCurve(dates=tuple(dates_out), values=np.array(values_out))
    return curve, blotter, metrics(curve, rf)
