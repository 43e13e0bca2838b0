"""
Total variation split into four Haar-phase terms.

tv = Σ_i h∘U_i, and each β·h∘U_i∘F* has an exact prox because U_i∘F*
is semi-orthogonal with the frame constant κ.
"""
import numpy as np

from Main.exceptions import ShapeError
from Operators.arrays import require_even_square
from Operators.gradients import h_function, haar_block_adjoint, haar_block_apply
from .base import ProxFn, check_gamma


def prox_tv_block(beta_eff, v):
    """
    Π = prox of β_eff·h.

    Diagonal quadrants pass through; each pair (v[k, l+N/2], v[k+N/2, l])
    is shrunk jointly by max(0, 1 − β_eff/‖pair‖).
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] % 2:
        raise ShapeError(f"block prox needs a square array with even side, got {v.shape}")
    half = v.shape[0] // 2
    out = v.copy()
    upper, lower = v[:half, half:], v[half:, :half]
    magnitude = np.hypot(upper, lower)
    factor = np.maximum(0.0, 1.0 - beta_eff / np.maximum(magnitude, 1e-300))
    out[:half, half:] = factor * upper
    out[half:, :half] = factor * lower
    return out


def prox_tv_i(i, frame, beta, x, gamma=1.0):
    """
    prox of γβ·h∘U_i∘F* on frame coefficients x:

        x + (1/κ) F(U_i* Π U_i y − y),   y = F* x,   Π thresholds at κγβ.
    """
    gamma = check_gamma(gamma)
    kappa = frame.kappa
    x = np.asarray(x, dtype=float)
    y = frame.adjoint(x)
    require_even_square(y)
    shrunk = haar_block_adjoint(i, prox_tv_block(kappa * gamma * beta, haar_block_apply(i, y)))
    return x + frame.apply(shrunk - y) / kappa


class TotalVariationBlock(ProxFn):
    """β·h∘U_i∘F*, one of the four phases of β·tv∘F*."""

    def __init__(self, index, frame, beta):
        if beta <= 0:
            raise ValueError(f"tv weight must be positive, got {beta}")
        if index not in (0, 1, 2, 3):
            raise ShapeError(f"tv phase must be in 0..3, got {index}")
        self.index = index
        self.frame = frame
        self.beta = float(beta)
        self.name = f"tv_{index}"

    def prox(self, x, gamma=1.0):
        return prox_tv_i(self.index, self.frame, self.beta, x, gamma)

    def objective(self, x):
        return self.beta * h_function(haar_block_apply(self.index, self.frame.adjoint(np.asarray(x, dtype=float))))
