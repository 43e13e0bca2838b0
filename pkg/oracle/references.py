"""
Brute-force proximity references.

``prox_oracle`` minimizes γf(y) + ½‖x − y‖² directly, either on a zooming
grid (dimension ≤ 4) or by a subgradient method; ``subgrad_check``
certifies a candidate p = prox_{γf}(x) through x − p ∈ γ∂f(p).
"""
import itertools
import logging

import numpy as np

from Main.exceptions import OracleBudgetError
from Operators.arrays import inner

logger = logging.getLogger(__name__)

GRID_MAX_DIMENSION = 4
GRID_SHRINK = 0.5


def _objective_callback(f):
    """Accept a ProxFn (its ``objective``) or a plain callable."""
    return getattr(f, "objective", f)


def prox_oracle(f, x, gamma=1.0, method="grid", radius=None, tol=1e-11, subgradient=None, iterations=20000):
    """
    Return ŷ ≈ argmin_y γf(y) + ½‖x − y‖².

    ``method="grid"`` works for any f with a full-dimensional domain near
    the answer; ``method="subgradient"`` needs ``subgradient`` (a callable
    returning an element of ∂f(y)).
    """
    value = _objective_callback(f)
    x = np.asarray(x, dtype=float)

    def cost(y):
        fy = value(y)
        if fy is None or not np.isfinite(fy):
            return np.inf
        return gamma * fy + 0.5 * float(np.sum((x - y) ** 2))

    if method == "subgradient":
        if subgradient is None:
            raise ValueError("subgradient method needs a subgradient callback")
        return _prox_by_subgradient(cost, subgradient, x, gamma, iterations)
    if method != "grid":
        raise ValueError(f"unknown oracle method {method!r}")
    if x.size > GRID_MAX_DIMENSION:
        raise OracleBudgetError(f"grid oracle is limited to dimension {GRID_MAX_DIMENSION}, got {x.size}")
    return _prox_by_grid(cost, x, radius, tol)


def _prox_by_grid(cost, x, radius, tol):
    points = 21 if x.size == 1 else 11
    centre = x.ravel().copy()
    half_width = radius if radius is not None else 2.0 * (1.0 + float(np.max(np.abs(x))))
    best, best_cost = centre, cost(x)

    while half_width > tol:
        axes = [np.linspace(c - half_width, c + half_width, points) for c in centre]
        for candidate in itertools.product(*axes):
            candidate = np.asarray(candidate)
            value = cost(candidate.reshape(x.shape))
            if value < best_cost:
                best, best_cost = candidate, value
        if not np.isfinite(best_cost):
            raise OracleBudgetError("grid oracle found no point of finite cost")
        centre = best
        half_width *= GRID_SHRINK
    return best.reshape(x.shape)


def _prox_by_subgradient(cost, subgradient, x, gamma, iterations):
    # the cost is 1-strongly convex, so 1/n steps converge
    y = x.copy()
    best, best_cost = y.copy(), cost(y)
    for n in range(1, iterations + 1):
        direction = gamma * np.asarray(subgradient(y), dtype=float) + (y - x)
        y = y - direction / n
        value = cost(y)
        if value < best_cost:
            best, best_cost = y.copy(), value
    if not np.isfinite(best_cost):
        raise OracleBudgetError("subgradient oracle never reached a point of finite cost")
    return best


def subgrad_check(f, p, x, gamma=1.0, probes=500, seed=0, scale=None, slack=1e-9):
    """
    True iff ⟨y − p, x − p⟩ + γf(p) ≤ γf(y) + slack for random probes y.

    Probes are Gaussian around p with spread ``scale`` (default
    max(1, ‖x − p‖)).
    """
    value = _objective_callback(f)
    p = np.asarray(p, dtype=float)
    x = np.asarray(x, dtype=float)
    fp = value(p)
    if fp is None or not np.isfinite(fp):
        return False

    rng = np.random.default_rng(seed)
    spread = scale if scale is not None else max(1.0, float(np.linalg.norm(x - p)))
    for _ in range(probes):
        y = p + spread * rng.standard_normal(p.shape)
        fy = value(y)
        if fy is None or not np.isfinite(fy):
            continue
        if inner(y - p, x - p) + gamma * fp > gamma * fy + slack:
            return False
    return True
