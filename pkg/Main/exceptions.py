"""
Errors shared by every app of the project.

Library code raises these; the ``proxsplit`` management command turns any
``ProxSplitError`` into a ``CommandError``.
"""


class ProxSplitError(Exception):
    """Base class for all project errors."""


# ============================================================
#   ARRAYS & OPERATORS
# ============================================================

class ShapeError(ProxSplitError, ValueError):
    """Array shapes are incompatible or unsupported."""


class NonFiniteError(ProxSplitError, ValueError):
    """An input array holds NaN or infinite entries."""


class SpectrumError(ProxSplitError, ValueError):
    """A spectrum or frequency mask breaks Hermitian symmetry."""


class FilterError(ProxSplitError, ValueError):
    """A wavelet filter is not orthonormal."""


class AdjointMismatchError(ProxSplitError):
    """A linear map and its declared adjoint disagree."""


# ============================================================
#   PROXIMITY OPERATORS
# ============================================================

class NonOrthonormalBasisError(ProxSplitError, ValueError):
    """A basis handed to a separable prox is not orthonormal."""


class SemiOrthogonalityError(ProxSplitError, ValueError):
    """L∘L* is not a positive multiple of the identity."""


class InfeasibleSetError(ProxSplitError, ValueError):
    """A constraint set built from the given parameters is empty."""


class ConvergenceError(ProxSplitError):
    """An inner iterative solve did not reach its tolerance."""


# ============================================================
#   SOLVERS
# ============================================================

class SolverConfigError(ProxSplitError, ValueError):
    """Solver parameters violate their admissible ranges."""


class ProxEvaluationError(ProxSplitError):
    """A prox evaluation failed inside a solver iteration."""

    def __init__(self, index, iteration, cause):
        self.index = index
        self.iteration = iteration
        super().__init__(f"prox of f_{index} failed at iteration {iteration}: {cause}")


# ============================================================
#   EXPERIMENTS & ORACLES
# ============================================================

class ConfigError(ProxSplitError, ValueError):
    """An experiment configuration failed schema validation."""


class MetricError(ProxSplitError, ValueError):
    """A quality figure is undefined for its inputs."""


class ImageFormatError(ProxSplitError, ValueError):
    """An image file is malformed."""

    def __init__(self, path, position, message):
        self.path = str(path)
        self.position = position
        super().__init__(f"{path} (byte {position}): {message}")


class OracleBudgetError(ProxSplitError):
    """A brute-force oracle exceeded its dimension or evaluation budget."""
