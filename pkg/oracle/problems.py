"""
Small-instance global minimization used to cross-check the solvers.

Problems are sums of OracleTerm objects: terms with a ``projector`` are
hard constraints (indicators), the others contribute a value and a
subgradient. The minimizer is found by projected subgradient descent
with Dykstra's algorithm as the projection onto several constraints.
"""
import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from Main.exceptions import OracleBudgetError
from Proximity.catalog import Indicator

logger = logging.getLogger(__name__)

MAX_DIMENSION = 64


@dataclass
class OracleTerm:
    value: Optional[Callable] = None
    subgradient: Optional[Callable] = None
    projector: Optional[object] = None

    @property
    def is_constraint(self):
        return self.projector is not None

    @classmethod
    def from_prox(cls, f, subgradient=None):
        """Wrap a ProxFn: indicators become constraints, everything else needs ``subgradient``."""
        projector = f.projector if isinstance(f, Indicator) else None
        return cls(value=f.objective, subgradient=subgradient, projector=projector)


@dataclass
class OracleProblem:
    """A bundle of terms on R^dimension together with its tolerance."""

    terms: list
    dimension: int
    tolerance: float = 1e-5
    shape: tuple = None

    def __post_init__(self):
        if self.dimension > MAX_DIMENSION:
            raise OracleBudgetError(f"oracle problems are limited to dimension {MAX_DIMENSION}, got {self.dimension}")
        if self.shape is None:
            self.shape = (self.dimension,)

    @property
    def constraints(self):
        return [t.projector for t in self.terms if t.is_constraint]

    @property
    def smooth_terms(self):
        return [t for t in self.terms if not t.is_constraint]

    def value(self, x):
        total = 0.0
        for term in self.smooth_terms:
            total += float(term.value(x))
        return total

    def subgradient(self, x):
        g = np.zeros(self.shape)
        for term in self.smooth_terms:
            g += np.asarray(term.subgradient(x), dtype=float)
        return g

    def project(self, x, iterations=200):
        constraints = self.constraints
        if not constraints:
            return x
        if len(constraints) == 1:
            return constraints[0].project(x)
        return dykstra(constraints, x, iterations=iterations)


@dataclass
class OracleSolution:
    x: np.ndarray
    value: float
    converged: bool
    iterations: int
    history: list = field(default_factory=list, repr=False)

    def __iter__(self):
        yield self.x
        yield self.value


def dykstra(projectors, x, iterations=200, tol=1e-13):
    """Projection onto the intersection of the sets of ``projectors``."""
    y = np.asarray(x, dtype=float).copy()
    corrections = [np.zeros_like(y) for _ in projectors]
    for _ in range(iterations):
        previous = y
        for index, projector in enumerate(projectors):
            shifted = y + corrections[index]
            y = projector.project(shifted)
            corrections[index] = shifted - y
        if np.linalg.norm(y - previous) <= tol * max(1.0, np.linalg.norm(y)):
            break
    return y


def min_oracle(problem, x0=None, iterations=100_000, step=0.1, step_rule="diminishing", dykstra_iterations=200):
    """
    Minimize Σ f_i over the constraint intersection.

    ``step_rule="diminishing"`` uses steps step/√n (any convex terms);
    ``"constant"`` uses a fixed step (smooth terms with Lipschitz
    gradients, step < 2/L). The best and the running-average iterates are
    both tracked and the better one returned. Missing the tolerance is a
    logged warning, reported through ``converged``.
    """
    x = np.zeros(problem.shape) if x0 is None else np.asarray(x0, dtype=float).reshape(problem.shape)
    x = problem.project(x, dykstra_iterations)
    best, best_value = x.copy(), problem.value(x)
    average = x.copy()
    checkpoint, checkpoint_gap = best_value, np.inf
    window = max(iterations // 10, 1)
    history = []

    for n in range(1, iterations + 1):
        rate = step / np.sqrt(n) if step_rule == "diminishing" else step
        x = problem.project(x - rate * problem.subgradient(x), dykstra_iterations)
        average += (x - average) / (n + 1)
        value = problem.value(x)
        if value < best_value:
            best, best_value = x.copy(), value
        if n % window == 0:
            history.append(best_value)
            checkpoint_gap = abs(checkpoint - best_value)
            checkpoint = best_value

    averaged = problem.project(average, dykstra_iterations)
    averaged_value = problem.value(averaged)
    if averaged_value < best_value:
        best, best_value = averaged, averaged_value

    converged = len(history) < 2 or checkpoint_gap <= problem.tolerance * max(1.0, abs(best_value))
    if not converged:
        logger.warning(f"min_oracle still moving after {iterations} iterations (last window gain {checkpoint_gap:.3e})")
    return OracleSolution(x=best, value=best_value, converged=converged, iterations=iterations, history=history)
