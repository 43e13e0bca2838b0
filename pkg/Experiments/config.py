"""
Versioned JSON configuration of the experiment runs.

Every document carries ``schema_version`` and an ``experiment`` id that
selects the model below. Validation failures surface as ConfigError with
one ``dotted.path: message`` entry per failing field.
"""
import json
import logging
from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from Main.exceptions import ConfigError
from Operators.arrays import is_power_of_two
from Splitting.config import SolverConfig, describe_validation_error

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1


# ============================================================
#   SHARED SECTIONS
# ============================================================

class NoiseSettings(BaseModel):
    """Additive white Gaussian noise w with standard deviation ``sigma``."""

    model_config = ConfigDict(extra="forbid")

    sigma: float = Field(default=0.0, ge=0)
    seed: int = Field(default=0, ge=0)


class SolverSettings(BaseModel):
    """γ, iteration count and relaxation of the PPXA run."""

    model_config = ConfigDict(extra="forbid")

    gamma: float = Field(gt=0)
    iterations: int = Field(ge=1)
    relaxation: float = Field(default=1.5, gt=0, lt=2)
    tolerance: float = Field(default=0.0, ge=0)
    workers: Optional[int] = Field(default=None, ge=1)

    def solver_config(self):
        return SolverConfig(
            gamma=self.gamma,
            relaxation=self.relaxation,
            max_iterations=self.iterations,
            tolerance=self.tolerance,
            workers=self.workers,
        )


class ExperimentConfig(BaseModel):
    """Fields common to every experiment document."""

    model_config = ConfigDict(extra="forbid")

    schema_version: Literal[1]
    experiment: int
    name: str = ""
    solver: SolverSettings

    @property
    def seed(self):
        noise = getattr(self, "noise", None)
        return None if noise is None else noise.seed

    def with_overrides(self, seed=None, use_tv=None, use_l1=None):
        """Copy with CLI overrides applied; flags a model lacks are ignored."""
        updates = {}
        if seed is not None and hasattr(self, "noise"):
            updates["noise"] = self.noise.model_copy(update={"seed": seed})
        if use_tv is not None and hasattr(self, "use_tv"):
            updates["use_tv"] = use_tv
        if use_l1 is not None and hasattr(self, "use_l1"):
            updates["use_l1"] = use_l1
        return self.model_copy(update=updates)


class ImagingConfig(ExperimentConfig):
    size: int = Field(default=32, ge=4)
    blur: int = Field(default=3, ge=1)
    noise: NoiseSettings = NoiseSettings()

    @model_validator(mode="after")
    def blur_fits_image(self):
        if self.blur % 2 == 0:
            raise ValueError(f"blur kernel size must be odd, got {self.blur}")
        if self.blur > self.size:
            raise ValueError(f"blur kernel {self.blur} exceeds image size {self.size}")
        return self


# ============================================================
#   PER-EXPERIMENT MODELS
# ============================================================

class Experiment1Config(ImagingConfig):
    """Deconvolution with a vignette, a known mean and partially known phases."""

    experiment: Literal[1] = 1
    vignette_radius: float = Field(
        default=1.15, gt=0, description="radius of the visible disk, in half image sides"
    )
    band_fraction: float = Field(default=0.8, gt=0, le=1)
    phase_perturbation: float = Field(default=0.05, ge=0, lt=1)
    alpha: float = Field(default=10.0, gt=0)
    p: float = Field(default=1.5, ge=1)


class Experiment2Config(ImagingConfig):
    """Frame-domain deconvolution with ℓ¹ and total-variation potentials."""

    experiment: Literal[2] = 2
    size: int = Field(default=64, ge=4)
    wavelet: Literal["symlet8", "haar"] = "symlet8"
    levels: int = Field(default=2, ge=1)
    alpha: float = Field(default=1.0, ge=0)
    beta: float = Field(default=5.0, ge=0)
    use_tv: bool = True
    use_l1: bool = True

    @model_validator(mode="after")
    def size_fits_levels(self):
        if self.size % (2 ** self.levels):
            raise ValueError(f"image size {self.size} is not divisible by 2^{self.levels}")
        return self


class Experiment3Config(ExperimentConfig):
    """Pulse shape design under spectral and temporal constraints."""

    experiment: Literal[3] = 3
    samples: int = Field(default=1024, ge=4)
    sampling_rate: float = Field(default=2560.0, gt=0)
    notch_hz: float = Field(default=50.0, gt=0)
    stopband_hz: float = Field(default=300.0, ge=0)
    rho: float = Field(default=10 ** -1.5, ge=0)
    energy: float = Field(default=2.0, ge=0)
    support_ms: float = Field(default=50.0, gt=0)
    crossing_ms: float = Field(default=3.125, gt=0)
    midpoint: float = 1.0
    p4: float = Field(default=2.0, ge=1)
    p5: float = Field(default=2.0, ge=1)
    feasibility_tolerance: float = Field(default=1e-6, gt=0)
    # P3P2P1 applied to the ppxa output, reported next to it
    finish_projection: bool = False

    @model_validator(mode="after")
    def samples_power_of_two(self):
        if not is_power_of_two(self.samples):
            raise ValueError(f"signal length must be a power of two, got {self.samples}")
        return self


MODELS = {1: Experiment1Config, 2: Experiment2Config, 3: Experiment3Config}


# ============================================================
#   LOADING
# ============================================================

def parse_config(data):
    """Validate a decoded JSON document and return the matching model."""
    if not isinstance(data, dict):
        raise ConfigError(f"config: expected an object, got {type(data).__name__}")
    experiment = data.get("experiment")
    if experiment is None:
        raise ConfigError("experiment: field required")
    model = MODELS.get(experiment) if isinstance(experiment, int) and not isinstance(experiment, bool) else None
    if model is None:
        raise ConfigError(f"experiment: must be one of {sorted(MODELS)}, got {experiment!r}")
    try:
        return model.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(describe_validation_error(exc)) from exc


def load_config(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    config = parse_config(data)
    logger.info(f"loaded experiment {config.experiment} config from {path}")
    return config
