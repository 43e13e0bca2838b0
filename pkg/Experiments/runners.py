"""
Assembly and execution of the three reconstruction experiments.

Each ``build_*`` function turns a config into the potentials handed to
ppxa; each ``run_*`` function runs the solver and collects the restored
signal, its metrics and the iteration log into an ExperimentOutcome.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from Operators.arrays import norm
from Operators.fourier import folded_frequencies
from Operators.frames import HAAR_LOWPASS, SYMLET8_LOWPASS, FrameSpec, TightFrame
from Proximity.catalog import DistancePower, Indicator, L1Norm, SemiOrthogonalComposition, SquaredResidual
from Proximity.projectors import (
    BoxMaskProjector,
    EnergyBallProjector,
    FourierMagnitudeProjector,
    FourierPhaseProjector,
    FourierZeroProjector,
    MeanHyperplaneProjector,
    SymmetryMidpointProjector,
    TimeMaskProjector,
    sequential_projection,
)
from Proximity.tv import TotalVariationBlock
from Splitting.solvers import ppxa, total_objective
from .degradation import (
    DegradationModel,
    interior_point,
    perturbed_phases,
    phase_band,
    seeded_streams,
    synthetic_image,
    vignette_mask,
)
from .metrics import bsnr_db, magnitude_db, rel_err_db, stopband_attenuation_db

logger = logging.getLogger(__name__)

GRAY_MAX = 255.0
LOWPASS = {"symlet8": SYMLET8_LOWPASS, "haar": HAAR_LOWPASS}


@dataclass
class ExperimentOutcome:
    """What a run produces; images for experiments 1 and 2, a pulse for 3."""

    experiment: int
    result: object
    metrics: dict
    restored: Optional[np.ndarray] = None
    degraded: Optional[np.ndarray] = None
    truth: Optional[np.ndarray] = None
    pulse: Optional[np.ndarray] = None
    spectrum: Optional[dict] = None
    extras: dict = field(default_factory=dict)

    @property
    def log(self):
        return self.result.log


def _solver_metrics(result):
    last = result.log.last
    return {
        "iterations": result.iterations,
        "status": result.status.value,
        "objective": None if last is None else last.objective,
        "final_step": None if last is None else last.residual,
        "qualification": None if result.advisory is None else result.advisory.status.value,
    }


def _imaging_metrics(model, restored):
    return {
        "bsnr_db": bsnr_db(model.blurred, model.noise),
        "degraded_rel_err_db": rel_err_db(model.observed, model.truth),
        "restored_rel_err_db": rel_err_db(restored, model.truth),
    }


# ============================================================
#   EXPERIMENT 1: VIGNETTED DECONVOLUTION WITH PHASE PRIOR
# ============================================================

@dataclass
class VignetteProblem:
    model: DegradationModel
    mask: np.ndarray
    band: np.ndarray
    phases: np.ndarray
    mean: float
    functions: list
    interior: np.ndarray


def build_experiment1(cfg, truth=None):
    """
    min α·d_{C3}^p(x) + ‖Lx − z‖² over C1 ∩ C2 with
    C1 = [0, 255]^N ∩ {x·1_S = 0}, C2 the known-mean hyperplane and C3
    the set of images whose low-frequency phases match the measured ones.
    """
    noise_rng, phase_rng = seeded_streams(cfg.noise.seed)
    mask = vignette_mask(cfg.size, cfg.vignette_radius)
    truth = synthetic_image(cfg.size) if truth is None else np.asarray(truth, dtype=float).copy()
    truth[mask] = 0.0

    model = DegradationModel.simulate(truth, cfg.blur, cfg.noise.sigma, noise_rng)
    band = phase_band(truth.shape, cfg.band_fraction)
    phases = perturbed_phases(truth, band, cfg.phase_perturbation, phase_rng)
    mean = float(truth.mean())

    functions = [
        Indicator(BoxMaskProjector(0.0, GRAY_MAX, mask)),
        Indicator(MeanHyperplaneProjector(mean)),
        DistancePower(FourierPhaseProjector(band, phases), cfg.alpha, cfg.p),
        SquaredResidual(model.operator, model.observed, weight=2.0),
    ]
    return VignetteProblem(
        model=model,
        mask=mask,
        band=band,
        phases=phases,
        mean=mean,
        functions=functions,
        interior=interior_point(mask, mean),
    )


def run_experiment1(cfg, callback=None, truth=None):
    problem = build_experiment1(cfg, truth)
    logger.info(
        f"experiment 1: {cfg.size}x{cfg.size}, blur {cfg.blur}, σ={cfg.noise.sigma:g}, "
        f"band {int(problem.band.sum())}/{problem.band.size} bins, vignette {int(problem.mask.sum())} px"
    )
    result = ppxa(
        problem.functions,
        cfg.solver.solver_config(),
        problem.model.observed,
        callback=callback,
        interior_point=problem.interior,
    )
    restored = result.solution
    metrics = {**_imaging_metrics(problem.model, restored), **_solver_metrics(result)}
    logger.info(
        f"experiment 1 done: degraded {metrics['degraded_rel_err_db']:.2f} dB, "
        f"restored {metrics['restored_rel_err_db']:.2f} dB"
    )
    return ExperimentOutcome(
        experiment=1,
        result=result,
        metrics=metrics,
        restored=restored,
        degraded=problem.model.observed,
        truth=problem.model.truth,
    )


# ============================================================
#   EXPERIMENT 2: FRAME-DOMAIN DECONVOLUTION WITH ℓ¹ + TV
# ============================================================

@dataclass
class FrameProblem:
    model: DegradationModel
    frame: TightFrame
    functions: list
    start: np.ndarray


def build_experiment2(cfg, truth=None):
    """
    min ι_C(F*x) + ‖LF*x − z‖² + α‖x‖₁ + β·Σ_i h(U_i F*x) over frame
    coefficients x. The ℓ¹ and TV terms are dropped when disabled or
    weighted by zero.
    """
    noise_rng, _ = seeded_streams(cfg.noise.seed)
    truth = synthetic_image(cfg.size) if truth is None else np.asarray(truth, dtype=float)
    model = DegradationModel.simulate(truth, cfg.blur, cfg.noise.sigma, noise_rng)

    frame = TightFrame(FrameSpec(lowpass=LOWPASS[cfg.wavelet], levels=cfg.levels), truth.shape)
    synthesis = frame.H
    kappa = frame.kappa

    functions = [
        SemiOrthogonalComposition(Indicator(BoxMaskProjector(0.0, GRAY_MAX)), synthesis, kappa=kappa),
        SemiOrthogonalComposition(SquaredResidual(model.operator, model.observed, weight=2.0), synthesis, kappa=kappa),
    ]
    if cfg.use_l1 and cfg.alpha > 0:
        functions.append(L1Norm(cfg.alpha))
    if cfg.use_tv and cfg.beta > 0:
        functions.extend(TotalVariationBlock(i, frame, cfg.beta) for i in range(4))

    return FrameProblem(model=model, frame=frame, functions=functions, start=frame.apply(model.observed) / kappa)


def run_experiment2(cfg, callback=None, truth=None):
    problem = build_experiment2(cfg, truth)
    logger.info(
        f"experiment 2: {cfg.size}x{cfg.size}, {cfg.wavelet} x{problem.frame.kappa} shifts, "
        f"{cfg.levels} levels, m={len(problem.functions)} (l1={cfg.use_l1}, tv={cfg.use_tv})"
    )
    result = ppxa(problem.functions, cfg.solver.solver_config(), problem.start, callback=callback)
    restored = problem.frame.adjoint(result.solution)
    metrics = {
        **_imaging_metrics(problem.model, restored),
        **_solver_metrics(result),
        "use_l1": cfg.use_l1,
        "use_tv": cfg.use_tv,
    }
    logger.info(
        f"experiment 2 done: degraded {metrics['degraded_rel_err_db']:.2f} dB, "
        f"restored {metrics['restored_rel_err_db']:.2f} dB"
    )
    return ExperimentOutcome(
        experiment=2,
        result=result,
        metrics=metrics,
        restored=restored,
        degraded=problem.model.observed,
        truth=problem.model.truth,
    )


# ============================================================
#   EXPERIMENT 3: PULSE SHAPE DESIGN
# ============================================================

def pulse_time_mask(samples, sampling_rate, support_ms, crossing_ms):
    """
    Samples forced to zero: everything outside the support centred on
    N/2, plus the zero-crossing grid N/2 + s·j and N/2 − 1 − s·j inside it.
    """
    mid = samples // 2
    half = int(round(support_ms * 1e-3 * sampling_rate / 2))
    spacing = max(1, int(round(crossing_ms * 1e-3 * sampling_rate)))
    mask = np.ones(samples, dtype=bool)
    mask[max(0, mid - half):min(samples, mid + half)] = False
    j = 1
    while spacing * j < half:
        for index in (mid + spacing * j, mid - 1 - spacing * j):
            if 0 <= index < samples:
                mask[index] = True
        j += 1
    return mask


@dataclass
class PulseProblem:
    notches: np.ndarray
    stopband: np.ndarray
    time_mask: np.ndarray
    hard: list
    soft: list
    functions: list


def build_experiment3(cfg):
    """
    min d_{C4}^{p4}(x) + d_{C5}^{p5}(x) over C1 ∩ C2 ∩ C3: spectral
    notches at multiples of ``notch_hz`` (DC included), |χ_k| ≤ ρ above
    ``stopband_hz``, ‖x‖ ≤ μ; softly, midpoint symmetry and the temporal
    support with its zero crossings.
    """
    frequencies = folded_frequencies(cfg.samples, cfg.sampling_rate)
    ratio = frequencies / cfg.notch_hz
    notches = np.abs(ratio - np.rint(ratio)) <= 1e-9
    stopband = frequencies > cfg.stopband_hz
    time_mask = pulse_time_mask(cfg.samples, cfg.sampling_rate, cfg.support_ms, cfg.crossing_ms)

    hard = [
        FourierZeroProjector(notches),
        FourierMagnitudeProjector(stopband, cfg.rho),
        EnergyBallProjector(cfg.energy),
    ]
    soft = [SymmetryMidpointProjector(cfg.midpoint), TimeMaskProjector(time_mask)]
    functions = [Indicator(p) for p in hard] + [
        DistancePower(soft[0], 1.0, cfg.p4),
        DistancePower(soft[1], 1.0, cfg.p5),
    ]
    return PulseProblem(notches=notches, stopband=stopband, time_mask=time_mask, hard=hard, soft=soft, functions=functions)


def constraint_violations(problem, x):
    """Hard-constraint residuals: notch magnitude, stop-band excess, energy excess."""
    spectrum = np.fft.fft(x)
    notch = float(np.max(np.abs(spectrum[problem.notches]))) if problem.notches.any() else 0.0
    return {
        "notch_max_magnitude": notch,
        "stopband_excess": max(problem.hard[1].max_violation(x), 0.0),
        "energy_excess": max(norm(x) - problem.hard[2].radius, 0.0),
    }


def pulse_spectrum(cfg, pulse):
    """Magnitude of the non-negative frequency bins, linear and in dB."""
    half = cfg.samples // 2 + 1
    spectrum = np.fft.fft(pulse)[:half]
    return {
        "frequency_hz": np.arange(half) * (cfg.sampling_rate / cfg.samples),
        "magnitude": np.abs(spectrum),
        "magnitude_db": magnitude_db(spectrum),
    }


def run_experiment3(cfg, callback=None):
    """
    The pulse is the ppxa output itself; ``violations`` and ``feasible``
    describe it. With ``finish_projection`` the sequential projection onto
    C3, C2, C1 is added under extras["projected"] and reported separately.
    """
    problem = build_experiment3(cfg)
    logger.info(
        f"experiment 3: N={cfg.samples} at {cfg.sampling_rate:g} Hz, {int(problem.notches.sum())} notch bins, "
        f"{int(problem.stopband.sum())} stop-band bins, {int(problem.time_mask.sum())} masked samples"
    )
    zero = np.zeros(cfg.samples)
    result = ppxa(problem.functions, cfg.solver.solver_config(), zero, callback=callback, interior_point=zero)

    pulse = result.solution
    violations = constraint_violations(problem, pulse)
    worst = max(violations.values())
    metrics = {
        **_solver_metrics(result),
        "violations": violations,
        "max_violation": worst,
        "feasible": bool(worst <= cfg.feasibility_tolerance),
        "soft_objective": total_objective(problem.functions[3:], pulse),
        "symmetry_distance": problem.soft[0].distance(pulse),
        "support_distance": problem.soft[1].distance(pulse),
        "energy": norm(pulse),
        "stopband_attenuation_db": stopband_attenuation_db(pulse, problem.stopband),
    }
    if not metrics["feasible"]:
        logger.warning(
            f"experiment 3: ppxa output misses the hard constraints by {worst:.3e} "
            f"(tolerance {cfg.feasibility_tolerance:g}) after {result.iterations} iterations"
        )

    extras = {"time_ms": np.arange(cfg.samples) * (1000.0 / cfg.sampling_rate)}
    if cfg.finish_projection:
        projected = sequential_projection(problem.hard, pulse)
        extras["projected"] = projected
        metrics["projected_violations"] = constraint_violations(problem, projected)
        metrics["correction"] = norm(projected - pulse)

    logger.info(
        f"experiment 3 done: attenuation {metrics['stopband_attenuation_db']:.2f} dB, "
        f"worst hard-constraint violation {worst:.3e}"
    )
    return ExperimentOutcome(
        experiment=3,
        result=result,
        metrics=metrics,
        pulse=pulse,
        spectrum=pulse_spectrum(cfg, pulse),
        extras=extras,
    )


RUNNERS = {1: run_experiment1, 2: run_experiment2, 3: run_experiment3}


def run_experiment(cfg, callback=None):
    return RUNNERS[cfg.experiment](cfg, callback=callback)
