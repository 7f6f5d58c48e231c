"""Solve reports shared by all optimizers, plus their CSV trajectory dumps."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = ["SolveReport", "write_trajectory_csv"]

STATUS_OK = "ok"
STATUS_MAX_ITERS = "max_iters"
STATUS_STALLED = "stalled"
STATUS_FAILED = "failed"


@dataclass
class SolveReport:
    """Outcome of one optimizer run.

    ``final_w`` is the decision vector in the solver's own layout;
    ``plan`` is the equivalent stacked per-step collaboration vector
    (identical for the standard layout, tiled for shared weights).
    ``trajectory_rows`` carries one dict per iteration using the
    algorithm's documented CSV schema.
    """

    algorithm: str
    status: str
    iterations: int
    objective: float
    objective_trajectory: list[float]
    final_w: np.ndarray
    plan: np.ndarray
    wall_ms: float = 0.0
    trajectory_rows: list[dict] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == STATUS_OK


def write_trajectory_csv(report: SolveReport, path: str | Path) -> Path:
    """Write the per-iteration rows; the header is the first row's keys."""
    path = Path(path)
    if not report.trajectory_rows:
        raise ValueError(f"report for {report.algorithm} has no trajectory rows")
    fields = list(report.trajectory_rows[0].keys())
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        writer.writerows(report.trajectory_rows)
    return path
