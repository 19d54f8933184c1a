"""The 20 fundamental indicators and forward quarterly log returns.

Indicator formulas (textbook definitions, fixed here for determinism):

  REVGH  revenue growth          revenue_T / revenue_{T-4} - 1 (same quarter, prior year)
  EPS    earnings per share      net income / shares outstanding
  ROA    return on assets        net income / total assets
  ROE    return on equity        net income / equity (missing when equity <= 0)
  PE     price to earnings       price / EPS
  PS     price to sales          price * shares / revenue
  NPM    net profit margin       net income / revenue
  GPM    gross profit margin     (revenue - COGS) / revenue
  OM     operating margin        operating income / revenue
  PB     price to book           price * shares / equity
  PCFO   price to cash flow      price * shares / operating cash flow
  CR     cash ratio              cash / current liabilities
  EM     enterprise multiple     EV / EBITDA, EV = price * shares + total debt - cash
  EVCFO  EV to cash flow         EV / operating cash flow
  LTDTA  long-term debt ratio    long-term debt / total assets
  WCR    working capital ratio   current assets / current liabilities
  DE     debt to equity          total debt / equity
  QR     quick ratio             (current assets - inventory) / current liabilities
  DSI    days sales of inventory 365 * inventory / COGS
  DPO    days payable outstanding 365 * accounts payable / COGS

A zero denominator or non-finite result marks the indicator missing; the
cleaning pipeline owns all missing-data policy.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date

import numpy as np

from .errors import DataError
from .ingest import FundamentalRecord, PriceSeries, add_quarters, quarter_start

FACTOR_NAMES = (
    "REVGH",
    "EPS",
    "ROA",
    "ROE",
    "PE",
    "PS",
    "NPM",
    "GPM",
    "OM",
    "PB",
    "PCFO",
    "CR",
    "EM",
    "EVCFO",
    "LTDTA",
    "WCR",
    "DE",
    "QR",
    "DSI",
    "DPO",
)


def add_months(d: date, n: int) -> date:
    idx = d.year * 12 + (d.month - 1) + n
    year, month = idx // 12, idx % 12 + 1
    # clamp into the target month (e.g. Aug 31 + 3 months -> Nov 30)
    last = (date(year + month // 12, month % 12 + 1, 1) - date(year, month, 1)).days
    return date(year, month, min(d.day, last))


def _div(num, den):
    if num is None or den is None or den == 0:
        return None
    v = num / den
    return v if math.isfinite(v) else None


def compute_factors(record: FundamentalRecord, price: float, trailing=()) -> dict:
    """All 20 indicator values for one company-quarter at a snap price.

    ``trailing`` holds prior FundamentalRecords of the same ticker; only the
    same-quarter-prior-year record is consulted (revenue growth).
    """
    if price is None or price <= 0:
        raise DataError(f"{record.ticker}: snap price must be positive")
    f = record.fields
    shares = f.get("shares_outstanding")
    mktcap = None if shares is None else price * shares
    equity = f.get("equity")
    cash = f.get("cash")
    total_debt = f.get("total_debt")
    ev = None
    if mktcap is not None and total_debt is not None and cash is not None:
        ev = mktcap + total_debt - cash

    prior_rev = None
    want_qe = add_quarters(quarter_start(record.quarter_end), -4)
    for prev in trailing:
        if quarter_start(prev.quarter_end) == want_qe and prev.ticker == record.ticker:
            prior_rev = prev.fields.get("revenue")

    eps = _div(f.get("net_income"), shares)
    roe = None
    if equity is not None and equity > 0:
        roe = _div(f.get("net_income"), equity)

    revgh = _div(f.get("revenue"), prior_rev)
    gross = None
    if f.get("revenue") is not None and f.get("cogs") is not None:
        gross = f["revenue"] - f["cogs"]
    quick = None
    if f.get("current_assets") is not None and f.get("inventory") is not None:
        quick = f["current_assets"] - f["inventory"]

    values = {
        "REVGH": None if revgh is None else revgh - 1.0,
        "EPS": eps,
        "ROA": _div(f.get("net_income"), f.get("total_assets")),
        "ROE": roe,
        "PE": _div(price, eps),
        "PS": _div(mktcap, f.get("revenue")),
        "NPM": _div(f.get("net_income"), f.get("revenue")),
        "GPM": _div(gross, f.get("revenue")),
        "OM": _div(f.get("operating_income"), f.get("revenue")),
        "PB": _div(mktcap, equity),
        "PCFO": _div(mktcap, f.get("operating_cash_flow")),
        "CR": _div(cash, f.get("current_liabilities")),
        "EM": _div(ev, f.get("ebitda")),
        "EVCFO": _div(ev, f.get("operating_cash_flow")),
        "LTDTA": _div(f.get("long_term_debt"), f.get("total_assets")),
        "WCR": _div(f.get("current_assets"), f.get("current_liabilities")),
        "DE": _div(total_debt, equity),
        "QR": _div(quick, f.get("current_liabilities")),
        "DSI": _div(None if f.get("inventory") is None else 365.0 * f["inventory"], f.get("cogs")),
        "DPO": _div(
            None if f.get("accounts_payable") is None else 365.0 * f["accounts_payable"],
            f.get("cogs"),
        ),
    }
    return values


@dataclass(frozen=True)
class ReturnObservation:
    ticker: str
    start: date
    horizon_quarters: int
    value: float


def forward_log_return(prices: PriceSeries, start: date, horizon_quarters: int = 1) -> ReturnObservation:
    """ln(S_end / S_start) with prices snapped to the first trading day on or
    after each nominal date."""
    end = add_months(start, 3 * horizon_quarters)
    s0 = prices.price_on_or_after(start)
    if s0 is None:
        raise DataError(f"{prices.ticker}: no price on or after {start}")
    s1 = prices.price_on_or_after(end)
    if s1 is None:
        raise DataError(f"{prices.ticker}: no price on or after {end}")
    return ReturnObservation(
        ticker=prices.ticker,
        start=start,
        horizon_quarters=horizon_quarters,
        value=math.log(s1 / s0),
    )


def compute_factor_table(sector, quarters, fundamentals, prices, universe, obs_date_fn):
    """Raw (uncleaned) per-sector factor table over a quarter range.

    fundamentals: {ticker: date-sorted list of FundamentalRecord} restricted
    to the sector. Returns (table, meta) where table maps (ticker, quarter
    start) to {factor: value-or-None} and meta records the as-of date and the
    release date of the fundamentals actually used.
    """
    table = {}
    meta = {}
    for q in quarters:
        obs = obs_date_fn(q)
        members = universe.constituents_at(obs)
        for ticker in sorted(members):
            recs = fundamentals.get(ticker)
            series = prices.get(ticker)
            if not recs or series is None:
                continue
            known = [r for r in recs if r.release_date <= obs]
            if not known:
                continue
            latest = max(known, key=lambda r: r.quarter_end)
            price = series.price_on_or_after(obs)
            if price is None:
                continue
            table[(ticker, q)] = compute_factors(latest, price, trailing=known)
            meta[(ticker, q)] = {
                "obs_date": obs,
                "release_date": latest.release_date,
                "quarter_end": latest.quarter_end,
            }
    return table, meta


@dataclass(frozen=True)
class PanelRow:
    ticker: str
    quarter: date
    values: dict
    fwd_log_return: float


@dataclass(frozen=True)
class FactorPanel:
    sector: int
    factor_names: tuple
    rows: tuple

    def subset(self, quarters) -> "FactorPanel":
        qs = set(quarters)
        return FactorPanel(
            sector=self.sector,
            factor_names=self.factor_names,
            rows=tuple(r for r in self.rows if r.quarter in qs),
        )

    def matrix(self):
        """(X, y, keys) with factor columns in self.factor_names order."""
        X = np.array(
            [[row.values[f] for f in self.factor_names] for row in self.rows], dtype=float
        )
        y = np.array([row.fwd_log_return for row in self.rows], dtype=float)
        keys = [(row.ticker, row.quarter) for row in self.rows]
        return X, y, keys


def build_panel(sector, quarters, cleaned_table, prices, obs_date_fn) -> FactorPanel:
    """Pair cleaned factor rows with their realized forward log returns.

    Both return endpoints come from obs_date_fn so the panel's r matches the
    trade-date anchors exactly. Rows lacking a computable forward return (no
    price at either endpoint) are skipped.
    """
    if not cleaned_table:
        raise DataError(f"sector {sector}: empty factor table for {quarters[0]}..{quarters[-1]}")
    factor_names = tuple(sorted(next(iter(cleaned_table.values()))))
    rows = []
    qset = set(quarters)
    for (ticker, q) in sorted(cleaned_table):
        if q not in qset:
            continue
        series = prices.get(ticker)
        if series is None:
            continue
        try:
            start = obs_date_fn(q)
            end = obs_date_fn(add_quarters(q, 1))
        except DataError:
            continue
        s0 = series.price_on_or_after(start)
        s1 = series.price_on_or_after(end)
        if s0 is None or s1 is None:
            continue
        rows.append(
            PanelRow(
                ticker=ticker,
                quarter=q,
                values=dict(cleaned_table[(ticker, q)]),
                fwd_log_return=math.log(s1 / s0),
            )
        )
    if not rows:
        raise DataError(f"sector {sector}: no usable rows in {quarters[0]}..{quarters[-1]}")
    return FactorPanel(sector=sector, factor_names=factor_names, rows=tuple(rows))


def panel_to_csv(panels, path):
    """Export panels as sector,ticker,quarter,<factors>,fwd_log_return."""
    names = panels[0].factor_names if panels else FACTOR_NAMES
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sector", "ticker", "quarter", *names, "fwd_log_return"])
        for panel in panels:
            for row in panel.rows:
                writer.writerow(
                    [
                        panel.sector,
                        row.ticker,
                        row.quarter.isoformat(),
                        *[repr(row.values[f]) for f in names],
                        repr(row.fwd_log_return),
                    ]
                )


def panel_from_csv(path):
    """Inverse of panel_to_csv; returns {sector: FactorPanel}."""
    by_sector = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        names = tuple(c for c in reader.fieldnames if c not in ("sector", "ticker", "quarter", "fwd_log_return"))
        for row in reader:
            sector = int(row["sector"])
            by_sector.setdefault(sector, []).append(
                PanelRow(
                    ticker=row["ticker"],
                    quarter=date.fromisoformat(row["quarter"]),
                    values={f: float(row[f]) for f in names},
                    fwd_log_return=float(row["fwd_log_return"]),
                )
            )
    return {
        s: FactorPanel(sector=s, factor_names=names, rows=tuple(rows))
        for s, rows in by_sector.items()
    }
