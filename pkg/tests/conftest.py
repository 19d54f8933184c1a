from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pytest

from stockrec.config import RunConfig
from stockrec.ingest import FundamentalRecord, PriceSeries
from stockrec.pipeline import run as pipeline_run
from stockrec.synth import SynthConfig, generate

# ensemble sizes trimmed for test runtime; behavior is size-independent
FAST_MODEL_OVERRIDES = {
    "random_forest": {"n_trees": 30},
    "gbm": {"n_stages": 60, "cv_folds": 0},
}


def make_record(ticker="AAA", sector=10, quarter_end=date(2000, 3, 31), release=None, **fields):
    base = {
        "revenue": 100.0,
        "net_income": 10.0,
        "total_assets": 500.0,
        "equity": 200.0,
        "current_assets": 200.0,
        "current_liabilities": 100.0,
        "inventory": 50.0,
        "cash": 30.0,
        "long_term_debt": 80.0,
        "operating_cash_flow": 12.0,
        "shares_outstanding": 10.0,
        "cogs": 60.0,
        "accounts_payable": 20.0,
        "operating_income": 15.0,
        "ebitda": 20.0,
        "total_debt": 100.0,
        "dividends": 3.0,
    }
    base.update(fields)
    return FundamentalRecord(
        ticker=ticker,
        sector=sector,
        quarter_end=quarter_end,
        release_date=release or quarter_end + timedelta(days=45),
        fields=base,
    )


def make_series(ticker, start, prices):
    dates = []
    d = start
    while len(dates) < len(prices):
        if d.weekday() < 5:
            dates.append(d)
        d += timedelta(days=1)
    return PriceSeries(ticker=ticker, dates=tuple(dates), prices=tuple(prices))


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    cfg = SynthConfig(n_sectors=2, stocks_per_sector=10, quarters=24, seed=42)
    generate(cfg, out)
    return out


@pytest.fixture(scope="session")
def small_run(synth_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("run_small")
    cfg = RunConfig(
        fundamentals=synth_dir / "fundamentals.csv",
        prices=synth_dir / "prices.csv",
        universe=synth_dir / "universe.csv",
        model_overrides=dict(FAST_MODEL_OVERRIDES),
        seed=7,
    ).validate()
    report = pipeline_run(cfg, out)
    return {"dir": Path(out), "report": report, "config": cfg, "data": synth_dir}
