"""Quarterly trade calendar: two-month reporting lag, expanding-then-sliding
train windows, and one-year test windows."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from datetime import date, timedelta

from .errors import ValidationError
from .factors import add_months
from .ingest import add_quarters, quarter_end, quarter_start

MIN_TRAIN_QUARTERS = 16
MAX_TRAIN_QUARTERS = 40
TEST_QUARTERS = 4


def nominal_trade_date(q: date) -> date:
    """Trade date for the quarter starting at q: two months past quarter end,
    i.e. the first of the month five months after the quarter start
    (Apr-Jun quarter -> Sep 1)."""
    return add_months(quarter_start(q), 5)


def weekday_trading_days(start: date, end: date, holidays=()) -> set:
    """Mon-Fri trading-day set over [start, end], minus a holiday list."""
    skip = set(holidays)
    days = set()
    d = start
    while d <= end:
        if d.weekday() < 5 and d not in skip:
            days.add(d)
        d += timedelta(days=1)
    return days


def first_trading_day_on_or_after(d: date, trading_days) -> date | None:
    limit = d + timedelta(days=30)
    cur = d
    while cur <= limit:
        if cur in trading_days:
            return cur
        cur += timedelta(days=1)
    return None


@dataclass(frozen=True)
class RebalanceEvent:
    index: int
    quarter: date            # start of the traded quarter T
    fiscal_quarter_end: date
    trade_date: date
    training_quarters: tuple
    test_quarters: tuple


@dataclass(frozen=True)
class TradeCalendar:
    events: tuple

    def __len__(self):
        return len(self.events)


def quarter_range(data_start: date, data_end: date):
    q0 = quarter_start(data_start)
    if q0 < data_start:
        q0 = add_quarters(q0, 1)
    quarters = []
    q = q0
    while quarter_end(q) <= data_end:
        quarters.append(q)
        q = add_quarters(q, 1)
    return quarters


def build_calendar(
    data_start: date,
    data_end: date,
    trading_days,
    min_train=MIN_TRAIN_QUARTERS,
    max_train=MAX_TRAIN_QUARTERS,
) -> TradeCalendar:
    """One rebalance event per quarter once min_train + 4 prior quarters exist.

    Training expands from min_train quarters until it reaches max_train, then
    slides; the four test quarters immediately precede the traded quarter, so
    every test return is realized exactly at the trade date.
    """
    if min_train > max_train:
        raise ValidationError(f"min_train {min_train} > max_train {max_train}")
    quarters = quarter_range(data_start, data_end)
    need = min_train + TEST_QUARTERS + 1
    if len(quarters) < need:
        raise ValidationError(
            f"data span covers {len(quarters)} full quarters; at least {need} required"
        )
    events = []
    for i in range(min_train + TEST_QUARTERS, len(quarters)):
        q = quarters[i]
        nominal = nominal_trade_date(q)
        if nominal > data_end:
            break
        td = first_trading_day_on_or_after(nominal, trading_days)
        if td is None or td > data_end:
            break
        train_len = min(i - TEST_QUARTERS, max_train)
        train = quarters[i - TEST_QUARTERS - train_len : i - TEST_QUARTERS]
        test = quarters[i - TEST_QUARTERS : i]
        events.append(
            RebalanceEvent(
                index=len(events),
                quarter=q,
                fiscal_quarter_end=quarter_end(q),
                trade_date=td,
                training_quarters=tuple(train),
                test_quarters=tuple(test),
            )
        )
    return TradeCalendar(events=tuple(events))


def split(event_index: int, calendar: TradeCalendar):
    if not 0 <= event_index < len(calendar.events):
        raise ValidationError(f"event index {event_index} out of range")
    ev = calendar.events[event_index]
    return list(ev.training_quarters), list(ev.test_quarters)


def calendar_to_csv(calendar: TradeCalendar, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["event_index", "quarter_end", "trade_date", "train_start", "train_end", "test_start", "test_end"]
        )
        for ev in calendar.events:
            writer.writerow(
                [
                    ev.index,
                    ev.fiscal_quarter_end.isoformat(),
                    ev.trade_date.isoformat(),
                    ev.training_quarters[0].isoformat(),
                    ev.training_quarters[-1].isoformat(),
                    ev.test_quarters[0].isoformat(),
                    ev.test_quarters[-1].isoformat(),
                ]
            )
