"""
Solver parameters.

A SolverConfig is immutable once built; invalid values raise
SolverConfigError rather than pydantic's ValidationError so callers only
deal with the project hierarchy.
"""
from typing import Callable, Optional, Union

import numpy as np
from django.conf import settings
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from Main.exceptions import SolverConfigError

WEIGHT_SUM_TOL = 1e-12


def describe_validation_error(exc):
    """One line per failing field: ``field.path: message``."""
    lines = []
    for error in exc.errors():
        path = ".".join(str(part) for part in error["loc"]) or "config"
        lines.append(f"{path}: {error['msg']}")
    return "; ".join(lines)


class SolverConfig(BaseModel):
    """
    Parameters shared by douglas_rachford, subspace_dr and ppxa.

    ``relaxation`` is a constant λ or a callable n ↦ λ_n; every emitted
    value must lie in (0, 2). ``errors`` is an optional callable
    (i, n) ↦ a_{i,n} (an array, or None for no error) added to the i-th
    prox output at iteration n. ``weights=None`` means ω_i = 1/m.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    gamma: float = Field(gt=0)
    weights: Optional[tuple[float, ...]] = None
    relaxation: Union[float, Callable[[int], float]] = 1.5
    max_iterations: int = Field(default=1000, ge=1)
    tolerance: float = Field(default=1e-8, ge=0)
    errors: Optional[Callable[[int, int], object]] = None
    workers: Optional[int] = Field(default=None, ge=1)
    track_objective: bool = True

    def __init__(self, **data):
        try:
            super().__init__(**data)
        except ValidationError as exc:
            raise SolverConfigError(describe_validation_error(exc)) from exc

    @field_validator("gamma")
    @classmethod
    def gamma_is_finite(cls, value):
        if not np.isfinite(value):
            raise ValueError("gamma must be finite")
        return value

    @field_validator("relaxation")
    @classmethod
    def constant_relaxation_in_range(cls, value):
        if not callable(value) and not 0.0 < value < 2.0:
            raise ValueError(f"relaxation must lie in (0, 2), got {value}")
        return value

    @field_validator("weights")
    @classmethod
    def weights_form_a_convex_combination(cls, value):
        if value is None:
            return value
        if not value:
            raise ValueError("at least one weight is needed")
        if any(not 0.0 < w <= 1.0 for w in value):
            raise ValueError(f"weights must lie in (0, 1], got {value}")
        if abs(sum(value) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights must sum to 1, got {sum(value)!r}")
        return value

    # ------------------------------------------------------------------

    def weights_for(self, m):
        """ω as an array of length m."""
        if self.weights is None:
            return np.full(m, 1.0 / m)
        if len(self.weights) != m:
            raise SolverConfigError(f"weights: {len(self.weights)} weights for {m} functions")
        return np.asarray(self.weights, dtype=float)

    def relaxation_at(self, n):
        """λ_n, checked against (0, 2) for callable schedules too."""
        value = float(self.relaxation(n)) if callable(self.relaxation) else float(self.relaxation)
        if not 0.0 < value < 2.0:
            raise SolverConfigError(f"relaxation: λ_{n} = {value} is outside (0, 2)")
        return value

    def error_at(self, index, n):
        if self.errors is None:
            return None
        return self.errors(index, n)

    @property
    def max_workers(self):
        if self.workers is not None:
            return self.workers
        return max(1, int(getattr(settings, "PROXSPLIT_MAX_WORKERS", 1)))
