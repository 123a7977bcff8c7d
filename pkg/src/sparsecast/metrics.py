"""Forecast error measures and the method comparison table.

NRMSE is RMSE divided by the range (max - min) of the actual values over the
evaluated window, in percent. This choice is what the comparison numbers
depend on; a mean-normalized NRMSE would give different values.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import LengthMismatch


@dataclass(frozen=True)
class ErrorReport:
    mae: float
    rmse: float
    # None when the actuals have zero range
    nrmse: float | None
    n_points: int


def compute_errors(actuals, predictions) -> ErrorReport:
    a = np.asarray(actuals, dtype=float).ravel()
    p = np.asarray(predictions, dtype=float).ravel()
    if a.shape != p.shape:
        raise LengthMismatch(f"{a.size} actuals vs {p.size} predictions")
    if a.size == 0:
        raise LengthMismatch("no points to evaluate")
    err = a - p
    mae = float(np.mean(np.abs(err)))
    # scaled to avoid under/overflow when squaring
    peak = float(np.max(np.abs(err)))
    rmse = peak * float(np.sqrt(np.mean((err / peak) ** 2))) if peak > 0 else 0.0
    span = float(a.max() - a.min())
    nrmse = 100.0 * rmse / span if span > 0 else None
    return ErrorReport(mae, rmse, nrmse, int(a.size))


def _fmt(v: float | None, digits: int) -> str:
    return "n/a" if v is None else f"{v:.{digits}f}"


def format_report(reports: Mapping[str, ErrorReport], fmt: str = "markdown") -> str:
    """One row per method, columns MAE, RMSE (km/h) and NRMSE (%)."""
    header = ["method", "MAE [km/h]", "RMSE [km/h]", "NRMSE [%]", "n"]
    rows = [
        [name, _fmt(r.mae, 4), _fmt(r.rmse, 4), _fmt(r.nrmse, 4), str(r.n_points)]
        for name, r in reports.items()
    ]
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["method", "mae_kmh", "rmse_kmh", "nrmse_pct", "n_points"])
        writer.writerows(rows)
        return buf.getvalue()
    if fmt != "markdown":
        raise ValueError(f"unknown report format {fmt!r}")
    lines = [
        "| " + " | ".join(header) + " |",
        "|" + "|".join(["---"] + ["---:"] * (len(header) - 1)) + "|",
    ]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines) + "\n"
