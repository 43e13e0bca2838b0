"""
Periodic (circulant) convolution.

Kernels smaller than the signal are embedded with their centre
``size // 2`` moved to index 0 and wrapped periodically; a kernel that
already has the signal's shape is taken as anchored at index 0.
"""
import logging

import numpy as np

from Main.exceptions import ShapeError
from .arrays import as_real_array
from .linear import LinearMap, MapKind

logger = logging.getLogger(__name__)


def uniform_kernel(size, ndim=2):
    """size^ndim box blur with unit sum; ``size`` must be odd so the centre is a sample."""
    if size < 1 or size % 2 == 0:
        raise ShapeError(f"uniform kernel size must be a positive odd integer, got {size}")
    return np.full((size,) * ndim, 1.0 / size**ndim)


def embed_kernel(kernel, shape):
    """Zero-pad ``kernel`` to ``shape`` with its centre at index 0."""
    kernel = as_real_array(kernel, name="kernel")
    shape = tuple(shape)
    if kernel.ndim != len(shape):
        raise ShapeError(f"kernel has {kernel.ndim} dimensions, signal has {len(shape)}")
    if kernel.shape == shape:
        return kernel.copy()
    if any(k > n for k, n in zip(kernel.shape, shape)):
        raise ShapeError(f"kernel {kernel.shape} larger than signal {shape}")

    padded = np.zeros(shape)
    padded[tuple(slice(0, k) for k in kernel.shape)] = kernel
    centre = tuple(-(k // 2) for k in kernel.shape)
    return np.roll(padded, centre, axis=tuple(range(len(shape))))


def transfer_function(kernel, shape):
    """DFT of the embedded kernel (the eigenvalues of the circulant matrix)."""
    return np.fft.fftn(embed_kernel(kernel, shape))


def circulant_apply(kernel, x):
    """Periodic convolution kernel ⊛ x through pointwise multiplication of spectra."""
    x = as_real_array(x)
    return np.fft.ifftn(transfer_function(kernel, x.shape) * np.fft.fftn(x)).real


def circulant_adjoint(kernel, x):
    x = as_real_array(x)
    return np.fft.ifftn(np.conj(transfer_function(kernel, x.shape)) * np.fft.fftn(x)).real


class CirculantMap(LinearMap):
    """
    Block circulant operator L of the degradation model z = Lx̄ + w.

    The transfer function is computed once; ``apply`` and ``adjoint``
    multiply by it and by its conjugate in the Fourier domain.
    """

    kind = MapKind.CIRCULANT

    def __init__(self, kernel, shape):
        super().__init__(shape, shape)
        self.kernel = np.asarray(kernel, dtype=float)
        self.transfer = transfer_function(self.kernel, self.input_shape)

    @classmethod
    def identity(cls, shape):
        delta = np.zeros(shape)
        delta[(0,) * len(shape)] = 1.0
        return cls(delta, shape)

    def apply(self, x):
        self._check_input(x)
        return np.fft.ifftn(self.transfer * np.fft.fftn(x)).real

    def adjoint(self, y):
        self._check_output(y)
        return np.fft.ifftn(np.conj(self.transfer) * np.fft.fftn(y)).real

    @property
    def operator_norm(self):
        return float(np.max(np.abs(self.transfer)))

    def __repr__(self):
        return f"<CirculantMap kernel{self.kernel.shape} on {self.input_shape}>"
