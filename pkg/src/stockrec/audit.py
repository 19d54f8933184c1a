"""Independent look-ahead audit over the emitted run logs.

Reads only calendar.csv and audit_rows.csv (dates, no model state) and checks
that every row used for training or testing was fully knowable at its
event's trade date."""

from __future__ import annotations

import csv
from datetime import date
from pathlib import Path

from .errors import DataError


def audit_leakage(run_dir):
    """Returns a list of violation descriptions; empty means clean."""
    run = Path(run_dir)
    cal_path = run / "calendar.csv"
    rows_path = run / "audit_rows.csv"
    for p in (cal_path, rows_path):
        if not p.exists():
            raise DataError(f"missing run file: {p}")

    trade_dates = {}
    with open(cal_path, newline="") as fh:
        for row in csv.DictReader(fh):
            trade_dates[int(row["event_index"])] = date.fromisoformat(row["trade_date"])

    violations = []
    with open(rows_path, newline="") as fh:
        for row in csv.DictReader(fh):
            ev = int(row["event_index"])
            td = trade_dates.get(ev)
            if td is None:
                violations.append(f"audit row references unknown event {ev}")
                continue
            if row["release_date"]:
                rd = date.fromisoformat(row["release_date"])
                if rd > td:
                    violations.append(
                        f"event {ev} {row['role']} row {row['ticker']}/{row['quarter']}: "
                        f"release {rd} after trade date {td}"
                    )
            realization = date.fromisoformat(row["realization_date"])
            if realization > td:
                violations.append(
                    f"event {ev} {row['role']} row {row['ticker']}/{row['quarter']}: "
                    f"return realized {realization} after trade date {td}"
                )
    return violations
