"""
Periodic discrete gradients and the Haar-like block operators U_i.

With a = y[k,l], b = y[k,l+1], c = y[k+1,l], d = y[k+1,l+1] (indices mod N):

    ∇0 y        = ½(a + b + c + d)
    ∇1 y        = ½(d − b + c − a)      horizontally smoothed vertical gradient
    (∇1(yᵀ))ᵀ   = ½(d − c + b − a)
    ∇2 y        = ½(d − b − c + a)

U_{q+2r} keeps the samples (2k+q, 2l+r) of each of the four outputs and
lays them out as the quadrants [[∇0, ∇1], [(∇1(yᵀ))ᵀ, ∇2]]. Each U_i is
an orthogonal map of the N×N images.
"""
import numpy as np

from Main.exceptions import ShapeError
from .arrays import as_real_array, require_even_square
from .linear import LinearMap, MapKind


def _corners(y):
    return y, np.roll(y, -1, axis=1), np.roll(y, -1, axis=0), np.roll(y, (-1, -1), axis=(0, 1))


def gradient_ops(y):
    """Return (∇0 y, ∇1 y, (∇1(yᵀ))ᵀ, ∇2 y) on a square periodic image."""
    y = as_real_array(y, name="image", allow_ndim=(2,))
    if y.shape[0] != y.shape[1]:
        raise ShapeError(f"gradients need a square image, got {y.shape}")
    a, b, c, d = _corners(y)
    return (
        0.5 * (a + b + c + d),
        0.5 * (d - b + c - a),
        0.5 * (d - c + b - a),
        0.5 * (d - b - c + a),
    )


def total_variation(y):
    """Σ_{k,l} sqrt((∇1 y)² + ((∇1(yᵀ))ᵀ)²)."""
    _, g1, g1t, _ = gradient_ops(y)
    return float(np.sum(np.hypot(g1, g1t)))


def h_function(v):
    """Σ over the top-right/bottom-left quadrant pairs of sqrt(v[k, l+N/2]² + v[k+N/2, l]²)."""
    v = np.asarray(v, dtype=float)
    require_even_square(v, name="block array")
    half = v.shape[0] // 2
    return float(np.sum(np.hypot(v[:half, half:], v[half:, :half])))


def _phase(i):
    if i not in (0, 1, 2, 3):
        raise ShapeError(f"Haar block index must be in 0..3, got {i}")
    return i % 2, i // 2


def haar_block_apply(i, y):
    """U_i y for i = q + 2r."""
    y = as_real_array(y, name="image", allow_ndim=(2,))
    require_even_square(y)
    q, r = _phase(i)
    ys = np.roll(y, (-q, -r), axis=(0, 1))
    a, b = ys[0::2, 0::2], ys[0::2, 1::2]
    c, d = ys[1::2, 0::2], ys[1::2, 1::2]
    return np.block([
        [0.5 * (a + b + c + d), 0.5 * (d - b + c - a)],
        [0.5 * (d - c + b - a), 0.5 * (d - b - c + a)],
    ])


def haar_block_adjoint(i, v):
    """U_i* v, which is also U_i⁻¹ v."""
    v = as_real_array(v, name="block array", allow_ndim=(2,))
    require_even_square(v, name="block array")
    q, r = _phase(i)
    half = v.shape[0] // 2
    g0, g1 = v[:half, :half], v[:half, half:]
    g1t, g2 = v[half:, :half], v[half:, half:]

    ys = np.empty_like(v)
    ys[0::2, 0::2] = 0.5 * (g0 - g1 - g1t + g2)
    ys[0::2, 1::2] = 0.5 * (g0 - g1 + g1t - g2)
    ys[1::2, 0::2] = 0.5 * (g0 + g1 - g1t - g2)
    ys[1::2, 1::2] = 0.5 * (g0 + g1 + g1t + g2)
    return np.roll(ys, (q, r), axis=(0, 1))


class HaarBlockMap(LinearMap):
    kind = MapKind.HAAR_BLOCK

    def __init__(self, i, shape):
        super().__init__(shape, shape)
        _phase(i)
        self.index = i

    def apply(self, x):
        self._check_input(x)
        return haar_block_apply(self.index, x)

    def adjoint(self, y):
        self._check_output(y)
        return haar_block_adjoint(self.index, y)

    def __repr__(self):
        return f"<HaarBlockMap U_{self.index} on {self.input_shape}>"


class GradientMap(LinearMap):
    """One of ∇0, ∇1, (∇1(yᵀ))ᵀ, ∇2 as a LinearMap (``which`` in 0..3, same order)."""

    kind = MapKind.GRADIENT

    # Stencil weights on (a, b, c, d).
    STENCILS = (
        (0.5, 0.5, 0.5, 0.5),
        (-0.5, -0.5, 0.5, 0.5),
        (-0.5, 0.5, -0.5, 0.5),
        (0.5, -0.5, -0.5, 0.5),
    )

    def __init__(self, which, shape):
        super().__init__(shape, shape)
        if which not in (0, 1, 2, 3):
            raise ShapeError(f"gradient index must be in 0..3, got {which}")
        self.which = which

    def apply(self, x):
        self._check_input(x)
        return gradient_ops(x)[self.which]

    def adjoint(self, y):
        self._check_output(y)
        wa, wb, wc, wd = self.STENCILS[self.which]
        # Transpose of the corner shifts: roll forward instead of backward.
        return (
            wa * y
            + wb * np.roll(y, 1, axis=1)
            + wc * np.roll(y, 1, axis=0)
            + wd * np.roll(y, (1, 1), axis=(0, 1))
        )
