"""
The weighted product space H^m.

Elements are stacked arrays of shape (m, *shape) with the inner product
Σ ω_i ⟨x_i, y_i⟩. Under that inner product the projector onto the
diagonal D = {(x, …, x)} is the weighted mean, and the prox of
Σ f_i(x_i) splits into prox_{γf_i/ω_i} per component.
"""
import numpy as np

from Main.exceptions import ShapeError
from Proximity.base import DomainKind, ProxFn, check_gamma
from Proximity.projectors import Projector


def weighted_sum(weights, arrays):
    """Σ ω_i a_i accumulated in index order."""
    total = weights[0] * arrays[0]
    for weight, array in zip(weights[1:], arrays[1:]):
        total = total + weight * array
    return total


def product_inner(weights, a, b):
    return float(sum(w * np.vdot(ai, bi).real for w, ai, bi in zip(weights, a, b)))


def product_norm(weights, a):
    return float(np.sqrt(max(product_inner(weights, a, a), 0.0)))


def stack(arrays):
    return np.stack([np.asarray(a, dtype=float) for a in arrays])


class DiagonalProjector(Projector):
    """P_D y = (Σ ω_i y_i, …, Σ ω_i y_i)."""

    domain = DomainKind.AFFINE
    name = "diagonal"

    def __init__(self, weights):
        self.weights = np.asarray(weights, dtype=float)

    def collapse(self, y):
        y = np.asarray(y, dtype=float)
        if y.shape[0] != self.weights.size:
            raise ShapeError(f"product element has {y.shape[0]} components, expected {self.weights.size}")
        return weighted_sum(self.weights, list(y))

    def lift(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(x, (self.weights.size,) + x.shape).copy()

    def project(self, y):
        return self.lift(self.collapse(y))

    def distance(self, y):
        y = np.asarray(y, dtype=float)
        return product_norm(self.weights, y - self.project(y))

    def contains(self, y, tol=None):
        tol = 1e-9 if tol is None else tol
        return self.distance(y) <= tol * max(1.0, product_norm(self.weights, y))


class ProductSeparable(ProxFn):
    """f(y_1, …, y_m) = Σ f_i(y_i) on the weighted product space."""

    name = "product"

    def __init__(self, functions, weights):
        self.functions = list(functions)
        self.weights = np.asarray(weights, dtype=float)
        if len(self.functions) != self.weights.size:
            raise ShapeError(f"{len(self.functions)} functions for {self.weights.size} weights")
        restricted = [f.domain for f in self.functions if f.domain != DomainKind.FULL]
        self.domain = restricted[0] if len(restricted) == 1 else (DomainKind.OTHER if restricted else DomainKind.FULL)

    @property
    def m(self):
        return len(self.functions)

    def prox(self, y, gamma=1.0):
        gamma = check_gamma(gamma)
        return stack([f.prox(component, gamma / w) for f, w, component in zip(self.functions, self.weights, y)])

    def objective(self, y):
        total = 0.0
        for f, component in zip(self.functions, y):
            value = f.objective(component)
            if value is None:
                return None
            total += float(value)
        return total

    def in_domain(self, y):
        return all(f.in_domain(component) for f, component in zip(self.functions, y))
