"""
Quality figures reported by the experiment runs. All are pure functions
of the arrays they are given.
"""
import numpy as np

from Main.exceptions import MetricError
from Operators.arrays import norm

DB_FLOOR = 1e-300


def decibels(ratio):
    return float(20.0 * np.log10(max(ratio, DB_FLOOR)))


def bsnr_db(blurred, noise):
    """Blurred signal to noise ratio 20·log10(‖Lx̄‖/‖w‖); +inf without noise."""
    noise_norm = norm(noise)
    if noise_norm == 0.0:
        return float("inf")
    return decibels(norm(blurred) / noise_norm)


def rel_err_db(estimate, truth):
    """20·log10(‖u − x̄‖/‖x̄‖); undefined for an all-zero x̄."""
    reference = norm(truth)
    if reference == 0.0:
        raise MetricError("relative error is undefined against an all-zero reference")
    return decibels(norm(np.asarray(estimate) - np.asarray(truth)) / reference)


def magnitude_db(spectrum):
    return 20.0 * np.log10(np.maximum(np.abs(spectrum), DB_FLOOR))


def stopband_attenuation_db(signal, stopband):
    """−20·log10 of the largest DFT magnitude on the stop-band."""
    spectrum = np.fft.fft(np.asarray(signal, dtype=float))
    stopband = np.asarray(stopband, dtype=bool)
    if not stopband.any():
        return float("inf")
    return -decibels(float(np.max(np.abs(spectrum[stopband]))))
