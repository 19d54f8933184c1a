"""Post-run reporting: P&L / drawdown series export and the summary table."""

from __future__ import annotations

import csv
import json
from datetime import date
from pathlib import Path

import numpy as np

from .backtest import EquityCurve, metrics
from .errors import DataError

DISPLAY_NAMES = {
    "max_sharpe": "Mean-Var",
    "equal": "Equally",
    "min_variance": "Min-Var",
}

SUMMARY_ROWS = (
    ("Start Value", "start_value", "{:,.0f}"),
    ("End Value", "end_value", "{:,.0f}"),
    ("Total Return", "total_return", "{:.2%}"),
    ("Max Drawdown", "max_drawdown", "{:.2%}"),
    ("Annualized Return", "annualized_return", "{:.2%}"),
    ("Annualized Std", "annualized_std", "{:.2%}"),
    ("Sharpe Ratio", "sharpe_ratio", "{:.3f}"),
)


def _read_curves(path):
    series = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            series.setdefault(row["method"], []).append(
                (date.fromisoformat(row["date"]), float(row["value"]))
            )
    for method in series:
        series[method].sort(key=lambda t: t[0])
    return series


def _read_benchmark(path):
    obs = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            obs.append((date.fromisoformat(row["date"]), float(row["value"])))
    obs.sort(key=lambda t: t[0])
    return obs


def generate_report(run_dir, benchmark_csv=None, out=print):
    """Emit pnl.csv and drawdown.csv into the run directory and print the
    per-method summary table. Returns the summary as a dict."""
    run = Path(run_dir)
    needed = [run / "equity_curve.csv", run / "report.json"]
    missing = [str(p) for p in needed if not p.exists()]
    if missing:
        raise DataError(f"missing run files: {missing}")

    with open(run / "report.json") as fh:
        report = json.load(fh)
    series = _read_curves(run / "equity_curve.csv")

    with open(run / "pnl.csv", "w", newline="") as fh_p, open(
        run / "drawdown.csv", "w", newline=""
    ) as fh_d:
        wp = csv.writer(fh_p)
        wd = csv.writer(fh_d)
        wp.writerow(["date", "method", "pnl"])
        wd.writerow(["date", "method", "drawdown"])
        for method in sorted(series):
            values = np.array([v for _, v in series[method]])
            pnl = values - values[0]
            dd = values / np.maximum.accumulate(values) - 1.0
            for (d, _), p, dval in zip(series[method], pnl, dd):
                wp.writerow([d.isoformat(), method, repr(float(p))])
                wd.writerow([d.isoformat(), method, repr(float(dval))])

    summary = {}
    for method, perf in report["methods"].items():
        summary[DISPLAY_NAMES.get(method, method)] = perf

    if benchmark_csv is not None:
        obs = _read_benchmark(benchmark_csv)
        if len(obs) >= 2:
            curve = EquityCurve(
                dates=tuple(d for d, _ in obs), values=np.array([v for _, v in obs])
            )
            summary["Benchmark"] = metrics(curve, report.get("rf", 0.015)).as_dict()

    columns = [c for c in ("Mean-Var", "Equally", "Min-Var") if c in summary]
    columns += [c for c in summary if c not in columns]
    width = 14
    out(f"(Risk-Free: {report.get('rf', 0.015):.2%})".ljust(20) + "".join(c.rjust(width) for c in columns))
    for label, key, fmt in SUMMARY_ROWS:
        cells = []
        for c in columns:
            v = summary[c].get(key)
            cells.append(("n/a" if v is None else fmt.format(v)).rjust(width))
        out(label.ljust(20) + "".join(cells))
    return summary
