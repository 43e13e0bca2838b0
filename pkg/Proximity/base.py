"""
The ProxFn contract.

A ProxFn packages one potential f of the objective: ``prox(x, γ)`` returns
prox_{γf}(x), the unique minimizer of γf(y) + ½‖x − y‖². Solvers always
call ``prox(x, γ/ω_i)``; each potential folds γ into its own parameters.
"""
import enum
import logging

import numpy as np
from django.conf import settings

from Main.exceptions import ProxSplitError
from Operators.arrays import norm

logger = logging.getLogger(__name__)


class DomainKind(str, enum.Enum):
    """Shape of dom f, as far as the qualification advisory needs it."""

    FULL = "full"
    AFFINE = "affine"
    BOUNDED_CONVEX = "bounded_convex"
    OTHER = "other"


def check_gamma(gamma):
    if not gamma > 0 or not np.isfinite(gamma):
        raise ValueError(f"prox parameter must be positive and finite, got {gamma}")
    return float(gamma)


class ProxFn:
    """
    Base class of every potential.

    Subclasses implement ``prox``; ``objective`` returns f(x) (possibly
    ``inf``) or ``None`` when the value is not computable.
    ``conjugate_prox`` may return prox_{γf*}(x) in closed form; ``None``
    means only the Moreau route is available.
    """

    domain = DomainKind.FULL
    name = "f"

    def prox(self, x, gamma=1.0):
        raise NotImplementedError

    def evaluate(self, x, gamma=1.0):
        return self.prox(x, gamma)

    __call__ = evaluate

    def objective(self, x):
        return None

    def conjugate_prox(self, x, gamma=1.0):
        return None

    def in_domain(self, x):
        """Membership of x in dom f; full-domain potentials accept everything."""
        return True

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class ZeroFunction(ProxFn):
    name = "0"

    def prox(self, x, gamma=1.0):
        check_gamma(gamma)
        return np.array(x, dtype=float)

    def objective(self, x):
        return 0.0

    def conjugate_prox(self, x, gamma=1.0):
        # 0* = ι_{0}
        return np.zeros_like(np.asarray(x, dtype=float))


class ScaledSquaredNorm(ProxFn):
    """f = (w/2)‖·‖²; its conjugate is (1/(2w))‖·‖²."""

    name = "squared_norm"

    def __init__(self, weight=1.0):
        self.weight = float(weight)

    def prox(self, x, gamma=1.0):
        return np.asarray(x, dtype=float) / (1.0 + check_gamma(gamma) * self.weight)

    def objective(self, x):
        return 0.5 * self.weight * norm(x) ** 2

    def conjugate_prox(self, x, gamma=1.0):
        return np.asarray(x, dtype=float) / (1.0 + check_gamma(gamma) / self.weight)


# ============================================================
#   CONJUGATES
# ============================================================

def moreau_conjugate_prox(f, x, gamma=1.0):
    """
    prox_{γf*}(x) = x − γ·prox_{f/γ}(x/γ).

    With ``settings.DEBUG`` the result is compared with the closed-form
    conjugate prox of f when one exists.
    """
    gamma = check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    result = x - gamma * f.prox(x / gamma, 1.0 / gamma)

    if getattr(settings, "DEBUG", False):
        direct = f.conjugate_prox(x, gamma)
        if direct is not None:
            gap = norm(result - direct)
            if gap > 1e-9 * max(1.0, norm(x)):
                raise ProxSplitError(f"Moreau decomposition of {f!r} off by {gap:.3e}")
            logger.debug(f"Moreau check on {f!r}: gap {gap:.3e}")
    return result


class Conjugate(ProxFn):
    """f* packaged as a ProxFn; its prox runs through the Moreau decomposition."""

    domain = DomainKind.OTHER

    def __init__(self, f):
        self.f = f
        self.name = f"{f.name}*"

    def prox(self, x, gamma=1.0):
        return moreau_conjugate_prox(self.f, x, gamma)

    def conjugate_prox(self, x, gamma=1.0):
        # f** = f
        return self.f.prox(x, gamma)
