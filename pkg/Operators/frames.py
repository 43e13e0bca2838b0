"""
Tight wavelet frames built from shifted orthonormal decompositions.

Each decomposition is a periodized separable dyadic DWT applied to a
circularly shifted copy of the image. With κ shifts the analysis map F
satisfies F*∘F = κ·Id. Coefficients of one decomposition use the
usual in-place layout (approximation in the top-left corner, details
around it); the κ decompositions are stacked vertically.
"""
import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from Main.exceptions import FilterError, ShapeError
from .arrays import as_real_array, norm
from .linear import LinearMap, MapKind

logger = logging.getLogger(__name__)

# Least-asymmetric Daubechies filter with 4 vanishing moments (length 8).
SYMLET8_LOWPASS = (
    -0.07576571478927333,
    -0.02963552764599851,
    0.49761866763201545,
    0.8037387518059161,
    0.29785779560527736,
    -0.09921954357684722,
    -0.012603967262037833,
    0.0322231006040427,
)

HAAR_LOWPASS = (0.7071067811865476, 0.7071067811865476)

DEFAULT_SHIFTS = ((0, 0), (1, 0), (0, 1), (1, 1))


def highpass_from_lowpass(lowpass):
    """Quadrature mirror filter g[n] = (−1)^n h[L−1−n]."""
    h = np.asarray(lowpass, dtype=float)
    signs = (-1.0) ** np.arange(h.size)
    return signs * h[::-1]


def check_orthonormal_filter(lowpass, tol=1e-10):
    """Σ_n h[n] h[n+2k] must equal δ_k."""
    h = np.asarray(lowpass, dtype=float)
    if h.ndim != 1 or h.size < 2 or h.size % 2:
        raise FilterError(f"lowpass filter must have even length ≥ 2, got {h.size}")
    for k in range(h.size // 2):
        product = float(np.dot(h[: h.size - 2 * k], h[2 * k:]))
        expected = 1.0 if k == 0 else 0.0
        if abs(product - expected) > tol:
            raise FilterError(f"filter is not orthonormal at even shift {2 * k}: {product:.3e}")


@lru_cache(maxsize=64)
def analysis_matrix(n, lowpass):
    """
    Orthogonal n×n matrix of one periodized DWT level.

    Rows 0..n/2−1 hold the lowpass filter shifted by 2k, rows n/2..n−1 the
    highpass filter; indices wrap modulo n.
    """
    if n % 2:
        raise ShapeError(f"cannot decimate a length-{n} axis")
    h = np.asarray(lowpass, dtype=float)
    g = highpass_from_lowpass(h)
    half = n // 2
    matrix = np.zeros((n, n))
    taps = np.arange(h.size)
    for k in range(half):
        cols = (2 * k + taps) % n
        np.add.at(matrix[k], cols, h)
        np.add.at(matrix[half + k], cols, g)
    matrix.setflags(write=False)
    return matrix


def dwt2(y, lowpass, levels):
    """Separable multilevel DWT with in-place coefficient layout."""
    out = np.array(y, dtype=float)
    rows, cols = out.shape
    for _ in range(levels):
        wr, wc = analysis_matrix(rows, lowpass), analysis_matrix(cols, lowpass)
        out[:rows, :cols] = wr @ out[:rows, :cols] @ wc.T
        rows, cols = rows // 2, cols // 2
    return out


def idwt2(c, lowpass, levels):
    out = np.array(c, dtype=float)
    total_rows, total_cols = out.shape
    for level in reversed(range(levels)):
        rows, cols = total_rows >> level, total_cols >> level
        wr, wc = analysis_matrix(rows, lowpass), analysis_matrix(cols, lowpass)
        out[:rows, :cols] = wr.T @ out[:rows, :cols] @ wc
    return out


# ============================================================
#   FRAME
# ============================================================

@dataclass(frozen=True)
class FrameSpec:
    """Filter, depth and shift set of a union of shifted orthonormal bases."""

    lowpass: tuple = SYMLET8_LOWPASS
    levels: int = 4
    shifts: tuple = DEFAULT_SHIFTS

    def __post_init__(self):
        object.__setattr__(self, "lowpass", tuple(float(v) for v in self.lowpass))
        object.__setattr__(self, "shifts", tuple(tuple(int(v) for v in s) for s in self.shifts))
        check_orthonormal_filter(self.lowpass)
        if self.levels < 1:
            raise ShapeError(f"frame needs at least one level, got {self.levels}")
        if not self.shifts:
            raise ShapeError("frame needs at least one shift")

    @property
    def kappa(self):
        return len(self.shifts)

    @classmethod
    def haar(cls, levels=1, shifts=((0, 0),)):
        return cls(lowpass=HAAR_LOWPASS, levels=levels, shifts=shifts)

    def check_shape(self, shape):
        step = 2 ** self.levels
        if len(shape) != 2 or shape[0] % step or shape[1] % step:
            raise ShapeError(f"image shape {tuple(shape)} is not divisible by 2^{self.levels}")


def frame_analysis(spec, y):
    """F y: the κ shifted decompositions stacked into a (κ·rows, cols) array."""
    y = as_real_array(y, name="image", allow_ndim=(2,))
    spec.check_shape(y.shape)
    return np.vstack([dwt2(np.roll(y, shift, axis=(0, 1)), spec.lowpass, spec.levels) for shift in spec.shifts])


def frame_synthesis(spec, c):
    """F* c: the adjoint of ``frame_analysis``."""
    c = np.asarray(c, dtype=float)
    kappa = spec.kappa
    if c.ndim != 2 or c.shape[0] % kappa:
        raise ShapeError(f"coefficient array {c.shape} does not stack {kappa} decompositions")
    rows = c.shape[0] // kappa
    spec.check_shape((rows, c.shape[1]))
    image = np.zeros((rows, c.shape[1]))
    for index, shift in enumerate(spec.shifts):
        block = idwt2(c[index * rows:(index + 1) * rows], spec.lowpass, spec.levels)
        image += np.roll(block, (-shift[0], -shift[1]), axis=(0, 1))
    return image


class TightFrame(LinearMap):
    """
    The analysis operator F of a FrameSpec on images of a fixed shape.

    ``adjoint`` is the synthesis F*, so F*∘F = κ·Id and F∘F* is κ times
    the orthogonal projector onto the range of F.
    """

    kind = MapKind.FRAME

    def __init__(self, spec, image_shape):
        spec.check_shape(image_shape)
        rows, cols = image_shape
        super().__init__(image_shape, (spec.kappa * rows, cols))
        self.spec = spec

    @property
    def kappa(self):
        return self.spec.kappa

    def apply(self, x):
        self._check_input(x)
        return frame_analysis(self.spec, x)

    def adjoint(self, y):
        self._check_output(y)
        return frame_synthesis(self.spec, y)

    def tightness_error(self, trials=10, seed=0):
        """Worst ‖F*Fy − κy‖/‖y‖ over random images."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for _ in range(trials):
            y = rng.standard_normal(self.input_shape)
            worst = max(worst, norm(self.adjoint(self.apply(y)) - self.kappa * y) / norm(y))
        return worst
