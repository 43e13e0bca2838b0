"""
Even convex functions of one real variable.

They feed the separable prox (one function per basis vector) and the
prox of φ∘d_C. Every method accepts a scalar or an array and works
entrywise.
"""
import logging

import numpy as np
from scipy import optimize

from Main.exceptions import ConvergenceError

logger = logging.getLogger(__name__)

ROOT_TOL = 1e-12


class ScalarConvexFn:
    """
    φ: R → R, even and convex.

    ``beta`` is max ∂φ(0); ``conjugate_prox(t, γ)`` is prox_{γφ*}(t).
    """

    beta = 0.0

    def value(self, t):
        raise NotImplementedError

    def prox(self, t, gamma=1.0):
        raise NotImplementedError

    def conjugate_prox(self, t, gamma=1.0):
        # Moreau: prox_{γφ*}(t) = t − γ prox_{φ/γ}(t/γ)
        t = np.asarray(t, dtype=float)
        return t - gamma * self.prox(t / gamma, 1.0 / gamma)

    def subgradient(self, t):
        raise NotImplementedError

    @property
    def max_subgrad_at_zero(self):
        return self.beta


class ZeroScalar(ScalarConvexFn):
    def value(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))

    def prox(self, t, gamma=1.0):
        return np.asarray(t, dtype=float).copy()

    def conjugate_prox(self, t, gamma=1.0):
        # φ* = ι_{0}
        return np.zeros_like(np.asarray(t, dtype=float))

    def subgradient(self, t):
        return np.zeros_like(np.asarray(t, dtype=float))


class AbsPower(ScalarConvexFn):
    """φ(t) = α|t|^p with α > 0 and p ≥ 1."""

    def __init__(self, alpha=1.0, p=1.0):
        if alpha <= 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        if p < 1:
            raise ValueError(f"exponent must be at least 1, got {p}")
        self.alpha = float(alpha)
        self.p = float(p)
        self.beta = self.alpha if self.p == 1.0 else 0.0

    def value(self, t):
        return self.alpha * np.abs(np.asarray(t, dtype=float)) ** self.p

    def subgradient(self, t):
        t = np.asarray(t, dtype=float)
        if self.p == 1.0:
            return self.alpha * np.sign(t)
        return self.alpha * self.p * np.sign(t) * np.abs(t) ** (self.p - 1.0)

    def prox(self, t, gamma=1.0):
        t = np.asarray(t, dtype=float)
        a = gamma * self.alpha
        magnitude = np.abs(t)
        if self.p == 1.0:
            shrunk = np.maximum(magnitude - a, 0.0)
        elif self.p == 2.0:
            shrunk = magnitude / (1.0 + 2.0 * a)
        elif self.p == 1.5:
            # s = √u solves s² + (3/2)a·s − |t| = 0
            s = 2.0 * magnitude / (np.sqrt(2.25 * a * a + 4.0 * magnitude) + 1.5 * a)
            shrunk = s * s
        else:
            shrunk = np.vectorize(lambda m: solve_power_shrinkage(m, a, self.p), otypes=[float])(magnitude)
        return np.sign(t) * shrunk

    def conjugate_prox(self, t, gamma=1.0):
        if self.p == 1.0:
            # φ* = ι_[−α, α]
            return np.clip(np.asarray(t, dtype=float), -self.alpha, self.alpha)
        return super().conjugate_prox(t, gamma)

    def __repr__(self):
        return f"AbsPower(alpha={self.alpha:g}, p={self.p:g})"


def solve_power_shrinkage(magnitude, a, p):
    """
    The u ≥ 0 with u + a·p·u^{p−1} = magnitude (magnitude ≥ 0, p > 1).

    Newton from the magnitude itself; bisection on [0, magnitude] when
    Newton leaves the bracket or stalls.
    """
    if magnitude == 0.0:
        return 0.0

    def residual(u):
        return u + a * p * max(u, 0.0) ** (p - 1.0) - magnitude

    def slope(u):
        return 1.0 + a * p * (p - 1.0) * max(u, 1e-300) ** (p - 2.0)

    try:
        root = optimize.newton(residual, magnitude, fprime=slope, tol=ROOT_TOL * max(1.0, magnitude), maxiter=100)
        if 0.0 <= root <= magnitude and abs(residual(root)) <= 1e-12 * max(1.0, magnitude):
            return float(root)
    except (RuntimeError, OverflowError, ZeroDivisionError):
        pass

    root, info = optimize.brentq(residual, 0.0, magnitude, xtol=1e-15, rtol=4 * np.finfo(float).eps, full_output=True)
    if not info.converged:
        raise ConvergenceError(f"power shrinkage root not found for magnitude {magnitude:g}, p={p:g}")
    logger.debug(f"bisection fallback for p={p:g}, magnitude={magnitude:g}")
    return float(root)
