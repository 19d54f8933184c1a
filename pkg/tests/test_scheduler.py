from datetime import date

import pytest

from stockrec.errors import ValidationError
from stockrec.scheduler import (
    MAX_TRAIN_QUARTERS,
    MIN_TRAIN_QUARTERS,
    TEST_QUARTERS,
    build_calendar,
    calendar_to_csv,
    first_trading_day_on_or_after,
    nominal_trade_date,
    split,
    weekday_trading_days,
)
from stockrec.ingest import add_quarters


def _weekdays(start, end):
    return weekday_trading_days(start, end)


def test_trade_date_two_month_lag():
    # quarter 04/01-06/30 trades 09/01
    assert nominal_trade_date(date(2001, 4, 1)) == date(2001, 9, 1)
    assert nominal_trade_date(date(2001, 5, 15)) == date(2001, 9, 1)
    # quarter ending 12/31 trades on/after 03/01
    assert nominal_trade_date(date(2001, 10, 1)) == date(2002, 3, 1)


def test_trade_date_rolls_to_monday():
    # 2001-09-01 is a Saturday; Monday is 09/03
    days = _weekdays(date(2001, 8, 1), date(2001, 10, 1))
    assert first_trading_day_on_or_after(date(2001, 9, 1), days) == date(2001, 9, 3)


def test_first_trading_day_none_when_gap_too_long():
    assert first_trading_day_on_or_after(date(2001, 9, 1), set()) is None


def _calendar(n_quarters, start=date(1990, 1, 1), **kw):
    end = add_quarters(start, n_quarters)
    days = _weekdays(start, end)
    return build_calendar(start, end, days, **kw)


def test_too_short_span_errors():
    with pytest.raises(ValidationError, match="21"):
        _calendar(19)


def test_first_event_has_min_training():
    cal = _calendar(30)
    ev = cal.events[0]
    assert len(ev.training_quarters) == MIN_TRAIN_QUARTERS
    assert len(ev.test_quarters) == TEST_QUARTERS
    # 21st quarter of data: train = quarters 1-16, test = 17-20
    assert ev.training_quarters[0] == date(1990, 1, 1)
    assert ev.training_quarters[-1] == date(1993, 10, 1)
    assert ev.test_quarters == (
        date(1994, 1, 1),
        date(1994, 4, 1),
        date(1994, 7, 1),
        date(1994, 10, 1),
    )
    assert ev.quarter == date(1995, 1, 1)


def test_expanding_then_sliding():
    cal = _calendar(60)
    lengths = [len(ev.training_quarters) for ev in cal.events]
    # expands 16, 17, ... up to 40 then stays
    assert lengths[0] == MIN_TRAIN_QUARTERS
    assert all(b - a in (0, 1) for a, b in zip(lengths, lengths[1:]))
    assert max(lengths) == MAX_TRAIN_QUARTERS
    # 50th quarter of data: sliding cap of 40
    ev50 = next(ev for ev in cal.events if ev.quarter == add_quarters(date(1990, 1, 1), 49))
    assert len(ev50.training_quarters) == MAX_TRAIN_QUARTERS


def test_test_blocks_advance_one_quarter():
    cal = _calendar(40)
    for a, b in zip(cal.events, cal.events[1:]):
        assert b.test_quarters[0] == add_quarters(a.test_quarters[0], 1)
        assert b.trade_date > a.trade_date
        assert b.quarter == add_quarters(a.quarter, 1)


def test_test_block_immediately_precedes_traded_quarter():
    cal = _calendar(30)
    for ev in cal.events:
        assert add_quarters(ev.test_quarters[-1], 1) == ev.quarter
        assert add_quarters(ev.training_quarters[-1], 1) == ev.test_quarters[0]


def test_trade_dates_in_expected_months():
    cal = _calendar(40)
    for ev in cal.events:
        assert ev.trade_date.month in (3, 6, 9, 12)
        assert ev.trade_date >= nominal_trade_date(ev.quarter)


def test_calendar_is_pure():
    a = _calendar(35)
    b = _calendar(35)
    assert a == b


def test_split_accessor():
    cal = _calendar(30)
    train, test = split(0, cal)
    assert tuple(train) == cal.events[0].training_quarters
    assert tuple(test) == cal.events[0].test_quarters
    with pytest.raises(ValidationError):
        split(99, cal)


def test_calendar_csv(tmp_path):
    cal = _calendar(25)
    p = tmp_path / "calendar.csv"
    calendar_to_csv(cal, p)
    lines = p.read_text().strip().splitlines()
    assert lines[0] == "event_index,quarter_end,trade_date,train_start,train_end,test_start,test_end"
    assert len(lines) == len(cal.events) + 1


def test_holidays_push_trade_date():
    start, end = date(1990, 1, 1), date(1996, 6, 30)
    days = weekday_trading_days(start, end, holidays=[date(1995, 6, 1), date(1995, 6, 2)])
    cal = build_calendar(start, end, days)
    ev = next(ev for ev in cal.events if nominal_trade_date(ev.quarter) == date(1995, 6, 1))
    # 6/1 Thu and 6/2 Fri are holidays -> Monday 6/5
    assert ev.trade_date == date(1995, 6, 5)
