"""Simulation designs, replication runner and error metrics."""

from .metrics import CSV_COLUMNS, SummaryRow, mse_vs_combined, mset_vs_truth, summarize, write_csv
from .runner import (
    CoverageResult,
    RepResult,
    coverage_experiment,
    coverage_from_results,
    generate_center_data,
    pooled_dataset,
    run_replication,
    run_scenario,
)
from .scenarios import SCENARIOS, CovSpec, Scenario, full_grid, get_scenario

__all__ = [
    "CSV_COLUMNS",
    "SCENARIOS",
    "CovSpec",
    "CoverageResult",
    "RepResult",
    "Scenario",
    "SummaryRow",
    "coverage_experiment",
    "coverage_from_results",
    "full_grid",
    "generate_center_data",
    "get_scenario",
    "mse_vs_combined",
    "mset_vs_truth",
    "pooled_dataset",
    "run_replication",
    "run_scenario",
    "summarize",
    "write_csv",
]
