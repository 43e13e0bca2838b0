"""
Array conventions shared by every operator.

A RealArray is a float64 ``numpy.ndarray`` holding a 1-D signal ``(n,)``
or a 2-D image ``(rows, cols)``; all indices are zero-based and every
entry must be finite.
"""
import numpy as np

from Main.exceptions import NonFiniteError, ShapeError


def as_real_array(x, name="x", allow_ndim=(1, 2)):
    """Validate ``x`` as a RealArray and return it as float64."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim not in allow_ndim:
        raise ShapeError(f"{name} must have {' or '.join(map(str, allow_ndim))} dimensions, got shape {arr.shape}")
    if arr.size == 0:
        raise ShapeError(f"{name} is empty")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} holds non-finite entries")
    return arr


def require_same_shape(a, b, names=("a", "b")):
    if np.shape(a) != np.shape(b):
        raise ShapeError(f"shape mismatch: {names[0]}{np.shape(a)} vs {names[1]}{np.shape(b)}")


def require_even_square(y, name="image"):
    """Periodic image operators of the TV split need square images with an even side."""
    if y.ndim != 2 or y.shape[0] != y.shape[1]:
        raise ShapeError(f"{name} must be a square image, got shape {y.shape}")
    if y.shape[0] % 2:
        raise ShapeError(f"{name} side must be even, got {y.shape[0]}")


def inner(a, b):
    """Euclidean scalar product of two real arrays of equal shape."""
    return float(np.vdot(np.ravel(a), np.ravel(b)).real)


def norm(a):
    return float(np.linalg.norm(np.ravel(a)))


def is_power_of_two(n):
    return n > 0 and (n & (n - 1)) == 0


def relative_error(a, b):
    """‖a − b‖ / max(‖b‖, 1e-300)."""
    return norm(np.asarray(a) - np.asarray(b)) / max(norm(b), 1e-300)
