"""
Linear maps over RealArrays.

Every operator of the library (blur L, frame F and its synthesis F*,
the gradients ∇_j, the Haar-like blocks U_i) is a ``LinearMap`` exposing
``apply`` and ``adjoint`` and a descriptor naming what it is.
"""
import enum
import logging

import numpy as np
from django.conf import settings

from Main.exceptions import AdjointMismatchError, SemiOrthogonalityError, ShapeError
from .arrays import inner, norm

logger = logging.getLogger(__name__)


class MapKind(str, enum.Enum):
    CIRCULANT = "circulant"
    FRAME = "frame"
    GRADIENT = "gradient"
    HAAR_BLOCK = "haar_block"
    COMPOSITE = "composite"
    IDENTITY = "identity"
    SCALED = "scaled"
    DENSE = "dense"


class LinearMap:
    """
    Base class: subclasses implement ``apply`` and ``adjoint`` and set the
    input/output shapes the map is defined on.
    """

    kind = MapKind.COMPOSITE

    def __init__(self, input_shape, output_shape):
        self.input_shape = tuple(input_shape)
        self.output_shape = tuple(output_shape)

    def apply(self, x):
        raise NotImplementedError

    def adjoint(self, y):
        raise NotImplementedError

    def __call__(self, x):
        return self.apply(x)

    @property
    def H(self):
        """The adjoint as a LinearMap of its own."""
        return AdjointMap(self)

    def __matmul__(self, other):
        return CompositeMap(self, other)

    def __rmul__(self, scalar):
        return ScaledMap(self, scalar)

    def _check_input(self, x):
        if x.shape != self.input_shape:
            raise ShapeError(f"{self.kind.value} map expects shape {self.input_shape}, got {x.shape}")

    def _check_output(self, y):
        if y.shape != self.output_shape:
            raise ShapeError(f"{self.kind.value} adjoint expects shape {self.output_shape}, got {y.shape}")

    def __repr__(self):
        return f"<{type(self).__name__} {self.kind.value} {self.input_shape}->{self.output_shape}>"


class IdentityMap(LinearMap):
    kind = MapKind.IDENTITY

    def __init__(self, shape):
        super().__init__(shape, shape)

    def apply(self, x):
        return np.array(x, dtype=float)

    def adjoint(self, y):
        return np.array(y, dtype=float)


class ScaledMap(LinearMap):
    kind = MapKind.SCALED

    def __init__(self, base, scalar):
        super().__init__(base.input_shape, base.output_shape)
        self.base = base
        self.scalar = float(scalar)

    def apply(self, x):
        return self.scalar * self.base.apply(x)

    def adjoint(self, y):
        return self.scalar * self.base.adjoint(y)


class AdjointMap(LinearMap):
    def __init__(self, base):
        super().__init__(base.output_shape, base.input_shape)
        self.base = base
        self.kind = base.kind

    def apply(self, x):
        return self.base.adjoint(x)

    def adjoint(self, y):
        return self.base.apply(y)

    @property
    def H(self):
        return self.base


class CompositeMap(LinearMap):
    """``outer ∘ inner``: apply ``inner`` first."""

    kind = MapKind.COMPOSITE

    def __init__(self, outer, inner_map):
        if tuple(outer.input_shape) != tuple(inner_map.output_shape):
            raise ShapeError(
                f"cannot compose {outer!r} after {inner_map!r}: {inner_map.output_shape} != {outer.input_shape}"
            )
        super().__init__(inner_map.input_shape, outer.output_shape)
        self.outer = outer
        self.inner = inner_map

    def apply(self, x):
        return self.outer.apply(self.inner.apply(x))

    def adjoint(self, y):
        return self.inner.adjoint(self.outer.adjoint(y))


class DenseMap(LinearMap):
    """A matrix acting on flattened arrays; used for small bases and test problems."""

    kind = MapKind.DENSE

    def __init__(self, matrix, input_shape=None, output_shape=None):
        matrix = np.asarray(matrix, dtype=float)
        super().__init__(input_shape or (matrix.shape[1],), output_shape or (matrix.shape[0],))
        self.matrix = matrix

    def apply(self, x):
        return (self.matrix @ np.ravel(x)).reshape(self.output_shape)

    def adjoint(self, y):
        return (self.matrix.T @ np.ravel(y)).reshape(self.input_shape)


# ============================================================
#   DIAGNOSTICS
# ============================================================

def adjoint_mismatch(operator, trials=None, seed=0):
    """Worst relative gap |⟨Lx, y⟩ − ⟨x, L*y⟩| / (‖Lx‖‖y‖ + ‖x‖‖L*y‖) over random pairs."""
    trials = trials or getattr(settings, "PROXSPLIT_ADJOINT_PROBES", 100)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        x = rng.standard_normal(operator.input_shape)
        y = rng.standard_normal(operator.output_shape)
        lx, lty = operator.apply(x), operator.adjoint(y)
        scale = norm(lx) * norm(y) + norm(x) * norm(lty)
        if scale == 0.0:
            continue
        worst = max(worst, abs(inner(lx, y) - inner(x, lty)) / scale)
    return worst


def check_adjoint(operator, rtol=1e-10, trials=None, seed=0):
    gap = adjoint_mismatch(operator, trials=trials, seed=seed)
    if gap > rtol:
        raise AdjointMismatchError(f"{operator!r}: adjoint gap {gap:.3e} exceeds {rtol:.1e}")
    return gap


def semi_orthogonality_constant(operator, probes=5, rtol=1e-8, seed=0):
    """
    Estimate κ with L∘L* = κ·Id from random probes of the output space.

    Raises SemiOrthogonalityError when the probes disagree or κ is not positive.
    """
    rng = np.random.default_rng(seed)
    estimates = []
    for _ in range(probes):
        v = rng.standard_normal(operator.output_shape)
        llv = operator.apply(operator.adjoint(v))
        kappa = inner(llv, v) / inner(v, v)
        if kappa <= 0 or norm(llv - kappa * v) > rtol * max(norm(llv), 1e-300):
            raise SemiOrthogonalityError(f"{operator!r} is not semi-orthogonal (probe estimate {kappa:.6g})")
        estimates.append(kappa)
    kappa = float(np.mean(estimates))
    if max(abs(k - kappa) for k in estimates) > rtol * kappa:
        raise SemiOrthogonalityError(f"{operator!r}: inconsistent κ estimates {estimates}")
    logger.debug(f"semi-orthogonality constant of {operator!r}: {kappa:.12g}")
    return kappa
