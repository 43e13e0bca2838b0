"""
Discrete Fourier transform conventions.

The forward transform is unnormalized and the inverse carries the 1/N
factor (numpy's default "backward" norm), so for x of size N

    idft(dft(x)) = x        and        ‖x‖² = (1/N) Σ_k |χ_k|².

numpy's pocketfft handles every length; power-of-two sizes take the
radix-2 path and other sizes fall back to its mixed-radix/Bluestein code.
"""
from dataclasses import dataclass

import numpy as np

from Main.exceptions import SpectrumError
from .arrays import as_real_array

HERMITIAN_TOL = 1e-12


def conjugate_view(a):
    """Return b with b[k] = a[−k mod N] along every axis."""
    a = np.asarray(a)
    axes = tuple(range(a.ndim))
    return np.roll(np.flip(a, axis=axes), shift=(1,) * a.ndim, axis=axes)


def is_hermitian(spectrum, tol=HERMITIAN_TOL):
    spectrum = np.asarray(spectrum)
    scale = max(1.0, float(np.max(np.abs(spectrum))))
    return bool(np.max(np.abs(spectrum - np.conj(conjugate_view(spectrum)))) <= tol * scale)


def is_hermitian_mask(mask):
    """A frequency mask is admissible when it contains k exactly when it contains −k."""
    mask = np.asarray(mask, dtype=bool)
    return bool(np.array_equal(mask, conjugate_view(mask)))


def require_hermitian_mask(mask, name="mask"):
    if not is_hermitian_mask(mask):
        raise SpectrumError(f"{name} is not closed under k -> -k")


def self_conjugate_mask(shape):
    """Frequencies with k = −k (mod N) on every axis; their coefficients are real."""
    lin = np.arange(int(np.prod(shape))).reshape(shape)
    return lin == conjugate_view(lin)


def leading_half_mask(shape):
    """One representative (the smaller linear index) of every pair {k, −k}, self-conjugate bins excluded."""
    lin = np.arange(int(np.prod(shape))).reshape(shape)
    return lin < conjugate_view(lin)


def folded_frequencies(n, sampling_rate=1.0):
    """|frequency| of every DFT bin of a length-n signal: min(k, n−k)·rate/n."""
    k = np.arange(n)
    return np.minimum(k, n - k) * (sampling_rate / n)


# ============================================================
#   SPECTRUM TYPE
# ============================================================

@dataclass(frozen=True)
class ComplexSpectrum:
    """DFT coefficients of a RealArray; ``hermitian`` guarantees a real inverse."""

    data: np.ndarray
    hermitian: bool = True

    def __post_init__(self):
        if self.hermitian and not is_hermitian(self.data):
            raise SpectrumError("spectrum flagged Hermitian is not conjugate-symmetric")

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size


def dft(x):
    """Unnormalized forward DFT of a 1-D signal or 2-D image."""
    x = as_real_array(x)
    return ComplexSpectrum(np.fft.fftn(x), hermitian=True)


def idft(spectrum):
    """Inverse DFT (1/N scaling); requires a Hermitian spectrum so the result is real."""
    if isinstance(spectrum, ComplexSpectrum):
        data, flagged = spectrum.data, spectrum.hermitian
    else:
        data, flagged = np.asarray(spectrum, dtype=complex), False
    if not np.all(np.isfinite(data)):
        raise SpectrumError("spectrum holds non-finite entries")
    if not flagged and not is_hermitian(data):
        raise SpectrumError("inverse of a non-Hermitian spectrum is not real")
    return np.fft.ifftn(data).real


def energy(spectrum):
    """Parseval: the squared norm of the signal a spectrum came from."""
    data = spectrum.data if isinstance(spectrum, ComplexSpectrum) else np.asarray(spectrum)
    return float(np.sum(np.abs(data) ** 2) / data.size)
