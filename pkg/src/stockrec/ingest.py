"""Loading, validation, and cleaning of fundamental / price / universe data.

Cleaning follows three sequential rules applied per sector:
(a) drop any factor column with more than 5% missing cells,
(b) while overall missingness still exceeds 7%, greedily drop the stock
    contributing the most missing cells (ties broken by ticker),
(c) drop any remaining row with a missing cell.
Every removal is recorded so the cleanup can be replayed.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from datetime import date, timedelta

import numpy as np

from .errors import DataError

GICS_SECTORS = (10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60)

FUNDAMENTAL_FIELDS = (
    "revenue",
    "net_income",
    "total_assets",
    "equity",
    "current_assets",
    "current_liabilities",
    "inventory",
    "cash",
    "long_term_debt",
    "operating_cash_flow",
    "shares_outstanding",
    "cogs",
    "accounts_payable",
    "operating_income",
    "ebitda",
    "total_debt",
    "dividends",
)

QUARTER_START_MONTHS = (1, 4, 7, 10)


def quarter_start(d: date) -> date:
    month = 3 * ((d.month - 1) // 3) + 1
    return date(d.year, month, 1)


def quarter_end(d: date) -> date:
    qs = quarter_start(d)
    if qs.month == 10:
        return date(qs.year, 12, 31)
    return date(qs.year, qs.month + 3, 1) - timedelta(days=1)


def is_quarter_end(d: date) -> bool:
    return d == quarter_end(d)


def add_quarters(qs: date, n: int) -> date:
    """Shift a quarter-start date by n quarters."""
    idx = (qs.year * 4) + (qs.month - 1) // 3 + n
    return date(idx // 4, 3 * (idx % 4) + 1, 1)


@dataclass(frozen=True)
class FundamentalRecord:
    ticker: str
    sector: int
    quarter_end: date
    release_date: date
    fields: dict

    def __post_init__(self):
        if self.sector not in GICS_SECTORS:
            raise DataError(f"unknown GICS sector code {self.sector} for {self.ticker}")
        if not is_quarter_end(self.quarter_end):
            raise DataError(
                f"{self.ticker}: quarter_end {self.quarter_end} is not a quarter boundary"
            )
        if self.release_date < self.quarter_end:
            raise DataError(
                f"{self.ticker}: release_date {self.release_date} precedes "
                f"quarter_end {self.quarter_end}"
            )


@dataclass(frozen=True)
class PriceSeries:
    ticker: str
    dates: tuple
    prices: tuple

    def __post_init__(self):
        if any(b <= a for a, b in zip(self.dates, self.dates[1:])):
            raise DataError(f"{self.ticker}: price dates not strictly increasing")
        if any(p <= 0 for p in self.prices):
            raise DataError(f"{self.ticker}: non-positive price")
        if len(self.dates) != len(self.prices):
            raise DataError(f"{self.ticker}: dates/prices length mismatch")

    def price_on_or_after(self, d: date):
        """Adjusted close of the first trading day on or after d, or None."""
        idx = np.searchsorted(np.array(self.dates), d)
        if idx >= len(self.dates):
            return None
        return self.prices[idx]

    def window(self, start: date, end: date):
        """(dates, prices) with start < date <= end ... inclusive slice [start, end]."""
        ds = np.array(self.dates)
        lo = np.searchsorted(ds, start)
        hi = np.searchsorted(ds, end, side="right")
        return self.dates[lo:hi], np.asarray(self.prices[lo:hi], dtype=float)


class UniverseCalendar:
    """Quarterly index-constituent sets keyed by quarter start."""

    def __init__(self, members: dict):
        if not members:
            raise DataError("empty universe calendar")
        self._members = {qs: frozenset(t) for qs, t in members.items()}
        self._starts = sorted(self._members)

    @property
    def quarters(self):
        return list(self._starts)

    def constituents_at(self, d: date) -> frozenset:
        qs = quarter_start(d)
        if qs not in self._members:
            raise DataError(f"date {d} outside universe calendar range")
        return self._members[qs]


def _parse_date(text: str, line_no: int, col: str) -> date:
    try:
        return date.fromisoformat(text)
    except ValueError as exc:
        raise DataError(f"line {line_no}: bad date in column '{col}': {text!r}") from exc


def _parse_float(text: str, line_no: int, col: str):
    if text == "":
        return None
    try:
        return float(text)
    except ValueError as exc:
        raise DataError(f"line {line_no}: bad number in column '{col}': {text!r}") from exc


def load_fundamentals(path) -> list:
    """Parse fundamentals.csv into FundamentalRecord rows.

    Any malformed row aborts the load with its line number; nothing is
    silently dropped.
    """
    records = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return []
        required = {"ticker", "sector", "quarter_end", "release_date"}
        missing = required - set(reader.fieldnames)
        if missing:
            raise DataError(f"fundamentals header missing columns: {sorted(missing)}")
        field_cols = [c for c in reader.fieldnames if c not in required]
        for line_no, row in enumerate(reader, start=2):
            try:
                sector = int(row["sector"])
            except ValueError as exc:
                raise DataError(f"line {line_no}: bad sector {row['sector']!r}") from exc
            fields = {c: _parse_float(row[c], line_no, c) for c in field_cols}
            try:
                rec = FundamentalRecord(
                    ticker=row["ticker"],
                    sector=sector,
                    quarter_end=_parse_date(row["quarter_end"], line_no, "quarter_end"),
                    release_date=_parse_date(row["release_date"], line_no, "release_date"),
                    fields=fields,
                )
            except DataError as exc:
                raise DataError(f"line {line_no}: {exc}") from exc
            records.append(rec)
    return records


def save_fundamentals(records, path):
    field_cols = list(FUNDAMENTAL_FIELDS)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["ticker", "sector", "quarter_end", "release_date", *field_cols])
        for rec in records:
            writer.writerow(
                [
                    rec.ticker,
                    rec.sector,
                    rec.quarter_end.isoformat(),
                    rec.release_date.isoformat(),
                    *[_fmt(rec.fields.get(c)) for c in field_cols],
                ]
            )


def _fmt(v):
    if v is None:
        return ""
    return repr(float(v))


def load_prices(path) -> dict:
    """Parse prices.csv into {ticker: PriceSeries}."""
    per_ticker = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return {}
        for line_no, row in enumerate(reader, start=2):
            d = _parse_date(row["date"], line_no, "date")
            px = _parse_float(row["adj_close"], line_no, "adj_close")
            if px is None:
                raise DataError(f"line {line_no}: missing adj_close")
            per_ticker.setdefault(row["ticker"], []).append((d, px))
    out = {}
    for ticker, obs in per_ticker.items():
        obs.sort(key=lambda t: t[0])
        dates, prices = zip(*obs)
        out[ticker] = PriceSeries(ticker=ticker, dates=tuple(dates), prices=tuple(prices))
    return out


def save_prices(series_map, path):
    rows = []
    for ticker in sorted(series_map):
        s = series_map[ticker]
        rows.extend((d, ticker, p) for d, p in zip(s.dates, s.prices))
    rows.sort(key=lambda r: (r[0], r[1]))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["date", "ticker", "adj_close"])
        for d, ticker, p in rows:
            writer.writerow([d.isoformat(), ticker, repr(float(p))])


def load_universe(path) -> UniverseCalendar:
    members = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for line_no, row in enumerate(reader, start=2):
            qs = _parse_date(row["quarter_start"], line_no, "quarter_start")
            if qs != quarter_start(qs):
                raise DataError(f"line {line_no}: {qs} is not a quarter start")
            members.setdefault(qs, set()).add(row["ticker"])
    return UniverseCalendar(members)


def save_universe(cal: UniverseCalendar, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["quarter_start", "ticker"])
        for qs in cal.quarters:
            for ticker in sorted(cal.constituents_at(qs)):
                writer.writerow([qs.isoformat(), ticker])


def filter_lookahead(records, trade_date: date) -> list:
    """Keep only records whose release date is on or before the trade date."""
    return [r for r in records if r.release_date <= trade_date]


@dataclass
class CleanReport:
    sector: int
    removed_factors: list = field(default_factory=list)
    removed_stocks: list = field(default_factory=list)
    removed_rows: list = field(default_factory=list)


def _missing_fraction(table, factors):
    total = len(table) * len(factors)
    if total == 0:
        return 0.0
    missing = sum(1 for row in table.values() for f in factors if row[f] is None)
    return missing / total


def clean_missing(table: dict, sector: int):
    """Apply missing-data rules (a)-(c) to one sector's factor table.

    ``table`` maps (ticker, quarter) -> {factor: value-or-None}. Returns the
    cleaned table (no missing cells) and a CleanReport listing every removal.
    """
    report = CleanReport(sector=sector)
    if not table:
        return {}, report
    factors = sorted(next(iter(table.values())))
    n_rows = len(table)

    # (a) factors with > 5% missing cells
    kept_factors = []
    for f in factors:
        miss = sum(1 for row in table.values() if row[f] is None)
        if miss / n_rows > 0.05:
            report.removed_factors.append(f)
        else:
            kept_factors.append(f)
    if not kept_factors:
        raise DataError(f"sector {sector}: cleaning removed every factor")

    # (b) greedy stock removal while sector missingness > 7%; measured over
    # the full factor set so concentrated gaps flag a stock even when the
    # affected columns already fell to rule (a)
    current = dict(table)
    while _missing_fraction(current, factors) > 0.07:
        per_stock = {}
        for (ticker, _), row in current.items():
            per_stock[ticker] = per_stock.get(ticker, 0) + sum(
                1 for f in factors if row[f] is None
            )
        # most missing cells wins; ties broken by lexicographically smallest ticker
        worst = min(per_stock, key=lambda t: (-per_stock[t], t))
        report.removed_stocks.append(worst)
        current = {k: row for k, row in current.items() if k[0] != worst}
        if not current:
            raise DataError(f"sector {sector}: cleaning removed every stock")
    current = {k: {f: row[f] for f in kept_factors} for k, row in current.items()}

    # (c) rows that still contain a missing cell
    cleaned = {}
    for key in sorted(current):
        row = current[key]
        if any(row[f] is None for f in kept_factors):
            report.removed_rows.append(key)
        else:
            cleaned[key] = dict(row)
    if not cleaned:
        raise DataError(f"sector {sector}: cleaning removed every row")
    return cleaned, report


def replay_clean(table: dict, report: CleanReport) -> dict:
    """Re-apply a CleanReport's recorded removals to the raw table."""
    if not table:
        return {}
    factors = sorted(next(iter(table.values())))
    kept_factors = [f for f in factors if f not in report.removed_factors]
    removed_stocks = set(report.removed_stocks)
    removed_rows = set(map(tuple, report.removed_rows))
    out = {}
    for key in sorted(table):
        if key[0] in removed_stocks or tuple(key) in removed_rows:
            continue
        out[key] = {f: table[key][f] for f in kept_factors}
    return out
