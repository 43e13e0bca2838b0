"""
Iterate bundles, per-iteration records and run results.
"""
import csv
import enum
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

logger = logging.getLogger(__name__)

CSV_COLUMNS = ("n", "objective", "residual", "lambda", "millis")


class RunStatus(str, enum.Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"


@dataclass
class SolverState:
    """
    PPXA iterates at counter n: x_n, the y_{i,n}, the p_{i,n} and their
    weighted mean p_n. Douglas–Rachford runs use m = 1.
    """

    x: np.ndarray
    y: list
    p: list = field(default_factory=list)
    p_mean: Optional[np.ndarray] = None
    n: int = 0

    @property
    def m(self):
        return len(self.y)

    def weighted_average_gap(self, weights):
        """‖x_n − Σ ω_i y_{i,n}‖, zero when no errors are injected."""
        average = sum(w * y for w, y in zip(weights, self.y))
        return float(np.linalg.norm(self.x - average))

    def copy(self):
        return SolverState(
            x=self.x.copy(),
            y=[y.copy() for y in self.y],
            p=[p.copy() for p in self.p],
            p_mean=None if self.p_mean is None else self.p_mean.copy(),
            n=self.n,
        )


@dataclass(frozen=True)
class IterationRecord:
    n: int
    objective: Optional[float]
    residual: float
    relaxation: float
    millis: float
    prox_millis: tuple = ()
    fixed_point_residual: Optional[float] = None

    def as_row(self):
        objective = "" if self.objective is None else repr(float(self.objective))
        return [self.n, objective, repr(self.residual), repr(self.relaxation), f"{self.millis:.3f}"]


class IterationLog:
    """Append-only list of IterationRecord, one per iteration."""

    def __init__(self):
        self._records = []

    def append(self, record):
        if self._records and record.n != self._records[-1].n + 1:
            raise ValueError(f"iteration {record.n} appended after {self._records[-1].n}")
        self._records.append(record)

    def __len__(self):
        return len(self._records)

    def __iter__(self):
        return iter(self._records)

    def __getitem__(self, index):
        return self._records[index]

    @property
    def last(self):
        return self._records[-1] if self._records else None

    def objectives(self):
        return [r.objective for r in self._records]

    def residuals(self):
        return np.array([r.residual for r in self._records])

    def to_csv(self, path):
        """Write the log with a header row and one data row per iteration."""
        path = Path(path)
        with path.open("w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(CSV_COLUMNS)
            for record in self._records:
                writer.writerow(record.as_row())
        logger.debug(f"wrote {len(self._records)} log rows to {path}")
        return path


@dataclass
class SolverResult:
    """
    What a solver returns. ``solution`` is the minimizer estimate; for
    Douglas–Rachford ``fixed_point`` holds the limit y whose prox is that
    estimate.
    """

    solution: np.ndarray
    log: IterationLog
    status: RunStatus
    state: SolverState
    fixed_point: Optional[np.ndarray] = None
    advisory: Optional[object] = None

    @property
    def converged(self):
        return self.status == RunStatus.CONVERGED

    @property
    def iterations(self):
        return len(self.log)

    def __iter__(self):
        yield self.solution
        yield self.log
