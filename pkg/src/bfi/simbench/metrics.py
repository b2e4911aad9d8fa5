"""Mean squared error summaries over replicates."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


def _usable(results, tag):
    ok = [r for r in results if not r.failed]
    if not ok:
        raise ValueError("no usable replicates")
    if any(r.estimate(tag) is None for r in ok):
        raise ValueError(f"estimator {tag!r} is not defined for this scenario")
    return ok


def mse_vs_combined(results, tag: str) -> np.ndarray:
    """Per-coordinate mean of ``(estimate - pooled-data MAP)^2`` over usable replicates."""
    ok = _usable(results, tag)
    return np.mean([(r.estimate(tag) - r.combined) ** 2 for r in ok], axis=0)


def mset_vs_truth(results, tag: str) -> np.ndarray:
    """Per-coordinate mean of ``(estimate - truth)^2`` over usable replicates."""
    ok = _usable(results, tag)
    return np.mean([(r.estimate(tag) - r.truth) ** 2 for r in ok], axis=0)


@dataclass(frozen=True)
class SummaryRow:
    scenario: str
    estimator: str
    coordinate: str
    mse: float
    mset: float
    B_used: int
    B_failed: int


def summarize(scenario_name: str, results, estimators=("bfi", "wav", "single", "combined")) -> list[SummaryRow]:
    """One row per (estimator, coordinate); undefined estimators are skipped."""
    used = sum(not r.failed for r in results)
    failed = len(results) - used
    rows = []
    for tag in estimators:
        try:
            mse = mse_vs_combined(results, tag)
            mset = mset_vs_truth(results, tag)
        except ValueError:
            continue
        names = next(r.names for r in results if not r.failed)
        for k, nm in enumerate(names):
            rows.append(SummaryRow(scenario_name, tag, nm, float(mse[k]), float(mset[k]), used, failed))
    return rows


CSV_COLUMNS = ("scenario", "estimator", "coordinate", "mse", "mset", "B_used", "B_failed")


def write_csv(rows, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            w.writerow([r.scenario, r.estimator, r.coordinate, repr(r.mse), repr(r.mset), r.B_used, r.B_failed])
