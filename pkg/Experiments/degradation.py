"""
Synthetic ground truths and the degradation model z = Lx̄ + w.

Noise is drawn from numpy's PCG64 bit generator so a seed reproduces the
same realization on every platform.
"""
import logging
from dataclasses import dataclass

import numpy as np

from Main.exceptions import InfeasibleSetError, ShapeError
from Operators.convolution import CirculantMap, uniform_kernel
from Operators.fourier import conjugate_view, leading_half_mask, self_conjugate_mask

logger = logging.getLogger(__name__)


def rng_for(seed):
    return np.random.Generator(np.random.PCG64(seed))


def seeded_streams(seed, count=2):
    """Independent PCG64 generators spawned from one seed."""
    return [np.random.Generator(np.random.PCG64(child)) for child in np.random.SeedSequence(seed).spawn(count)]


# ============================================================
#   GROUND TRUTHS
# ============================================================

def synthetic_image(size):
    """
    Piecewise-constant test image with gray levels in [0, 255]: a
    background, a rectangle, a disk and a triangle.
    """
    if size < 4:
        raise ShapeError(f"synthetic image needs a side of at least 4, got {size}")
    rows, cols = np.mgrid[0:size, 0:size] / size
    image = np.full((size, size), 60.0)
    image[(rows > 0.2) & (rows < 0.55) & (cols > 0.15) & (cols < 0.5)] = 200.0
    image[(rows - 0.62) ** 2 + (cols - 0.65) ** 2 < 0.2**2] = 130.0
    image[(rows > 0.6) & (rows < 0.85) & (cols > 0.15) & (cols - 0.15 < rows - 0.6)] = 235.0
    image[(rows > 0.25) & (rows < 0.4) & (cols > 0.6) & (cols < 0.85)] = 20.0
    return image


def vignette_mask(size, radius=1.15):
    """Pixels farther than ``radius`` half-sides from the centre (the black corners)."""
    centre = (size - 1) / 2
    rows, cols = np.mgrid[0:size, 0:size]
    return (rows - centre) ** 2 + (cols - centre) ** 2 > (radius * size / 2) ** 2


def interior_point(mask, mean):
    """
    N²μ/(N² − card S)·(1 − 1_S): zero on the vignette, constant mean μ.

    It lies in the relative interior of every restricted domain of the
    vignetting problem whenever that constant is below 255.
    """
    mask = np.asarray(mask, dtype=bool)
    visible = mask.size - int(mask.sum())
    if visible == 0:
        raise InfeasibleSetError("vignette covers the whole image")
    return (mask.size * mean / visible) * (~mask).astype(float)


# ============================================================
#   DEGRADATION
# ============================================================

@dataclass(frozen=True)
class DegradationModel:
    """Blur operator L, noise realization w and observation z = Lx̄ + w."""

    operator: CirculantMap
    truth: np.ndarray
    noise: np.ndarray
    observed: np.ndarray

    @property
    def blurred(self):
        return self.operator.apply(self.truth)

    @classmethod
    def simulate(cls, truth, blur, sigma, rng):
        """``rng`` is a numpy Generator or a seed for a fresh PCG64 one."""
        truth = np.asarray(truth, dtype=float)
        if not isinstance(rng, np.random.Generator):
            rng = rng_for(rng)
        operator = CirculantMap(uniform_kernel(blur, truth.ndim), truth.shape)
        noise = sigma * rng.standard_normal(truth.shape)
        observed = operator.apply(truth) + noise
        logger.debug(f"degraded {truth.shape} image: blur {blur}, σ={sigma:g}")
        return cls(operator=operator, truth=truth, noise=noise, observed=observed)


# ============================================================
#   PHASE INFORMATION
# ============================================================

def phase_band(shape, fraction=0.8):
    """
    Low-frequency band holding about ``fraction`` of the DFT components,
    chosen by radial frequency. The band is closed under k -> −k.
    """
    grids = np.meshgrid(*(np.fft.fftfreq(n) for n in shape), indexing="ij")
    radius = np.sqrt(sum(g**2 for g in grids))
    threshold = np.quantile(radius, fraction)
    return radius <= threshold


def perturbed_phases(image, band, perturbation, rng):
    """
    Phases of the DFT of ``image`` scaled by independent factors uniform
    on [1 − perturbation, 1 + perturbation]. One factor is drawn per pair
    {k, −k} so the result stays antisymmetric; self-conjugate bins keep
    their exact phase.
    """
    spectrum = np.fft.fftn(np.asarray(image, dtype=float))
    exact = np.angle(spectrum)
    leading = leading_half_mask(spectrum.shape)
    factors = 1.0 + rng.uniform(-perturbation, perturbation, spectrum.shape)
    half = np.where(leading, exact * factors, 0.0)
    phases = half - conjugate_view(half)
    real_bins = self_conjugate_mask(spectrum.shape)
    phases[real_bins] = np.where(spectrum[real_bins].real < 0, np.pi, 0.0)
    phases[~np.asarray(band, dtype=bool)] = 0.0
    return phases
