"""
Projectors onto the closed convex sets used by the experiments.

Each Projector returns the exact Euclidean projection. Fourier-domain sets
use the unnormalized DFT of Operators.fourier; with Parseval the
projection acts bin by bin, and Hermitian masks keep the result real.
"""
import logging

import numpy as np
from django.conf import settings

from Main.exceptions import InfeasibleSetError, ShapeError, SpectrumError
from Operators.arrays import as_real_array, norm, require_same_shape
from Operators.fourier import conjugate_view, require_hermitian_mask, self_conjugate_mask
from .base import DomainKind

logger = logging.getLogger(__name__)


def membership_tol():
    return getattr(settings, "PROXSPLIT_MEMBERSHIP_TOL", 1e-9)


class Projector:
    """
    P_C for a nonempty closed convex set C.

    ``contains`` accepts x when d_C(x) ≤ tol·max(1, ‖x‖).
    """

    domain = DomainKind.OTHER
    name = "C"

    def project(self, x):
        raise NotImplementedError

    def __call__(self, x):
        return self.project(x)

    def distance(self, x):
        x = np.asarray(x, dtype=float)
        return norm(x - self.project(x))

    def contains(self, x, tol=None):
        tol = membership_tol() if tol is None else tol
        return self.distance(x) <= tol * max(1.0, norm(x))

    def __repr__(self):
        return f"<{type(self).__name__} {self.name}>"


class PointProjector(Projector):
    """C = {c}."""

    domain = DomainKind.AFFINE
    name = "point"

    def __init__(self, point):
        self.point = np.asarray(point, dtype=float)

    def project(self, x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(self.point, x.shape).copy()


class BoxMaskProjector(Projector):
    """
    C = [lo, hi]^n ∩ {x : x·1_S = 0}.

    Without a mask this is the plain box (interval in 1-D).
    """

    name = "box"

    def __init__(self, lo, hi, mask=None):
        self.lo = float(lo)
        self.hi = float(hi)
        self.mask = None if mask is None else np.asarray(mask, dtype=bool)
        if self.lo > self.hi:
            raise InfeasibleSetError(f"empty box [{self.lo}, {self.hi}]")
        if self.mask is not None and self.mask.any() and not self.lo <= 0.0 <= self.hi:
            raise InfeasibleSetError(f"masked pixels must vanish but 0 is outside [{self.lo}, {self.hi}]")
        bounded = np.isfinite(self.lo) and np.isfinite(self.hi)
        self.domain = DomainKind.BOUNDED_CONVEX if bounded else DomainKind.OTHER

    def project(self, x):
        x = as_real_array(x, allow_ndim=(1, 2))
        out = np.clip(x, self.lo, self.hi)
        if self.mask is not None:
            require_same_shape(out, self.mask, names=("x", "mask"))
            out[self.mask] = 0.0
        return out


def project_box_and_mask(lo, hi, zero_mask, x):
    return BoxMaskProjector(lo, hi, zero_mask).project(x)


class MeanHyperplaneProjector(Projector):
    """C = {x : ⟨x, 1⟩ = n·μ}."""

    domain = DomainKind.AFFINE
    name = "mean"

    def __init__(self, mean):
        self.mean = float(mean)

    def project(self, x):
        x = as_real_array(x)
        return x - (x.sum() - x.size * self.mean) / x.size


def project_mean_hyperplane(mean, x):
    return MeanHyperplaneProjector(mean).project(x)


class EnergyBallProjector(Projector):
    """C = {x : ‖x‖ ≤ μ}."""

    domain = DomainKind.BOUNDED_CONVEX
    name = "ball"

    def __init__(self, radius):
        if radius < 0:
            raise InfeasibleSetError(f"ball radius must be nonnegative, got {radius}")
        self.radius = float(radius)

    def project(self, x):
        x = as_real_array(x)
        size = norm(x)
        if size <= self.radius:
            return x.copy()
        return x * (self.radius / size)


def project_energy_ball(radius, x):
    return EnergyBallProjector(radius).project(x)


class TimeMaskProjector(Projector):
    """C = {x : x·1_S = 0}."""

    domain = DomainKind.AFFINE
    name = "time_mask"

    def __init__(self, mask):
        self.mask = np.asarray(mask, dtype=bool)

    def project(self, x):
        x = as_real_array(x)
        require_same_shape(x, self.mask, names=("x", "mask"))
        out = x.copy()
        out[self.mask] = 0.0
        return out


def project_time_mask(mask, x):
    return TimeMaskProjector(mask).project(x)


class SymmetryMidpointProjector(Projector):
    """
    C = {x : x_k = x_{N−1−k} for all k, x_{N/2} = 1} on even-length signals.

    The mirror of N/2 is N/2−1, so both entries are pinned to ``value``;
    every other mirror pair is replaced by its average.
    """

    domain = DomainKind.AFFINE
    name = "symmetry"

    def __init__(self, value=1.0):
        self.value = float(value)

    def project(self, x):
        x = as_real_array(x, allow_ndim=(1,))
        n = x.size
        if n % 2:
            raise ShapeError(f"midpoint symmetry needs an even length, got {n}")
        out = 0.5 * (x + x[::-1])
        out[n // 2 - 1] = out[n // 2] = self.value
        return out


def project_symmetry_midpoint(x, value=1.0):
    return SymmetryMidpointProjector(value).project(x)


# ============================================================
#   FOURIER-DOMAIN SETS
# ============================================================

class FourierProjector(Projector):
    """Common plumbing: a Hermitian frequency mask D checked against the signal shape."""

    def __init__(self, mask):
        self.mask = np.asarray(mask, dtype=bool)
        require_hermitian_mask(self.mask, name=f"{self.name} frequency mask")

    def _spectrum(self, x):
        x = as_real_array(x)
        require_same_shape(x, self.mask, names=("x", "frequency mask"))
        return np.fft.fftn(x)

    @staticmethod
    def _inverse(spectrum):
        return np.fft.ifftn(spectrum).real


class FourierZeroProjector(FourierProjector):
    """C = {x : χ_k = 0 for k ∈ D}."""

    domain = DomainKind.AFFINE
    name = "fourier_zero"

    def project(self, x):
        spectrum = self._spectrum(x)
        spectrum[self.mask] = 0.0
        return self._inverse(spectrum)


def project_fourier_zero(mask, x):
    return FourierZeroProjector(mask).project(x)


class FourierMagnitudeProjector(FourierProjector):
    """C = {x : |χ_k| ≤ ρ for k ∈ D}; phases are kept."""

    name = "fourier_magnitude"

    def __init__(self, mask, rho):
        super().__init__(mask)
        if rho < 0:
            raise InfeasibleSetError(f"magnitude bound must be nonnegative, got {rho}")
        self.rho = float(rho)

    def project(self, x):
        spectrum = self._spectrum(x)
        band = spectrum[self.mask]
        magnitude = np.abs(band)
        scale = np.where(magnitude > self.rho, self.rho / np.maximum(magnitude, 1e-300), 1.0)
        spectrum[self.mask] = band * scale
        return self._inverse(spectrum)

    def max_violation(self, x):
        """max_{k∈D} |χ_k| − ρ (≤ 0 inside C)."""
        spectrum = self._spectrum(x)
        if not self.mask.any():
            return -self.rho
        return float(np.max(np.abs(spectrum[self.mask])) - self.rho)


def project_fourier_magnitude(mask, rho, x):
    return FourierMagnitudeProjector(mask, rho).project(x)


class FourierPhaseProjector(FourierProjector):
    """
    C = {x : ∠χ_k = φ_k for k ∈ D}, read as χ_k on the closed ray {r·e^{iφ_k} : r ≥ 0}.

    Phases must satisfy φ_{−k} = −φ_k (mod 2π) on D, and self-conjugate
    bins in D need φ_k ∈ {0, π}. Bins whose component along the ray is
    negative go to the ray's origin.
    """

    name = "fourier_phase"

    def __init__(self, mask, phases, tol=1e-9):
        super().__init__(mask)
        phases = np.asarray(phases, dtype=float)
        if phases.shape != self.mask.shape:
            raise ShapeError(f"phase array {phases.shape} does not match mask {self.mask.shape}")
        self.phases = phases

        wrapped = np.angle(np.exp(1j * (phases + conjugate_view(phases))))
        if np.any(np.abs(wrapped[self.mask]) > tol):
            raise SpectrumError("phases on the band are not antisymmetric under k -> -k")
        real_bins = self.mask & self_conjugate_mask(self.mask.shape)
        if np.any(np.abs(np.sin(phases[real_bins])) > tol):
            raise SpectrumError("self-conjugate bins must carry phase 0 or pi")

        self.rays = np.exp(1j * phases)
        self.rays[real_bins] = np.sign(np.cos(phases[real_bins]))
        self._band = self.mask & ~real_bins
        self._real_bins = real_bins

    def project(self, x):
        spectrum = self._spectrum(x)
        rays = self.rays[self._band]
        along = np.real(spectrum[self._band] * np.conj(rays))
        spectrum[self._band] = np.maximum(along, 0.0) * rays

        signs = self.rays[self._real_bins].real
        spectrum[self._real_bins] = np.maximum(spectrum[self._real_bins].real * signs, 0.0) * signs
        return self._inverse(spectrum)


def project_fourier_phase(mask, phases, x):
    return FourierPhaseProjector(mask, phases).project(x)


# ============================================================
#   INTERSECTIONS
# ============================================================

def sequential_projection(projectors, x):
    """P_k ∘ … ∘ P_1 x, applied in the given order."""
    out = np.asarray(x, dtype=float)
    for projector in projectors:
        out = projector.project(out)
    return out
