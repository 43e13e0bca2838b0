"""
The proximity operator catalog.

Every potential used by the solvers and the experiments is a ProxFn
subclass below; the module-level ``prox_*`` functions are the same
operators in functional form.
"""
import logging

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg

from Main.exceptions import ConvergenceError, NonOrthonormalBasisError, ShapeError
from Operators.arrays import norm
from Operators.convolution import CirculantMap
from Operators.linear import IdentityMap, semi_orthogonality_constant
from .base import DomainKind, ProxFn, check_gamma
from .scalar import AbsPower, ScalarConvexFn, solve_power_shrinkage

logger = logging.getLogger(__name__)

CG_RTOL = 1e-10
CG_MAXITER = 1000


# ============================================================
#   INDICATORS & NORMS
# ============================================================

class Indicator(ProxFn):
    """ι_C: 0 on C, +∞ elsewhere; the prox is P_C for every γ."""

    def __init__(self, projector):
        self.projector = projector
        self.domain = projector.domain
        self.name = f"ι_{projector.name}"

    def prox(self, x, gamma=1.0):
        check_gamma(gamma)
        return self.projector.project(x)

    def objective(self, x):
        return 0.0 if self.projector.contains(x) else np.inf

    def in_domain(self, x):
        return self.projector.contains(x)


def prox_l1(alpha, x, gamma=1.0):
    """Soft threshold at γα."""
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.maximum(np.abs(x) - check_gamma(gamma) * alpha, 0.0)


class L1Norm(ProxFn):
    """α‖·‖₁."""

    name = "l1"

    def __init__(self, alpha=1.0):
        if alpha <= 0:
            raise ValueError(f"l1 weight must be positive, got {alpha}")
        self.alpha = float(alpha)

    def prox(self, x, gamma=1.0):
        return prox_l1(self.alpha, x, gamma)

    def objective(self, x):
        return self.alpha * float(np.sum(np.abs(x)))

    def conjugate_prox(self, x, gamma=1.0):
        # (α‖·‖₁)* is the indicator of the ℓ∞ ball of radius α
        return np.clip(np.asarray(x, dtype=float), -self.alpha, self.alpha)


# ============================================================
#   QUADRATIC DATA TERM
# ============================================================

def prox_quadratic(operator, z, weight, x, gamma=1.0):
    """
    prox of γ·(w/2)‖L· − z‖²: the solution p of (Id + c L*L) p = x + c L*z, c = γw.

    Circulant and identity operators are solved exactly per frequency;
    any other LinearMap goes through conjugate gradients.
    """
    c = check_gamma(gamma) * weight
    if c <= 0:
        raise ValueError(f"combined quadratic weight must be positive, got {c}")
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)

    if isinstance(operator, IdentityMap):
        return (x + c * z) / (1.0 + c)

    if isinstance(operator, CirculantMap):
        transfer = operator.transfer
        numerator = np.fft.fftn(x) + c * np.conj(transfer) * np.fft.fftn(z)
        return np.fft.ifftn(numerator / (1.0 + c * np.abs(transfer) ** 2)).real

    shape = operator.input_shape
    size = int(np.prod(shape))

    def normal_matvec(v):
        v = np.reshape(v, shape)
        return (v + c * operator.adjoint(operator.apply(v))).ravel()

    system = LinearOperator((size, size), matvec=normal_matvec, dtype=float)
    rhs = (x + c * operator.adjoint(z)).ravel()
    solution, info = cg(system, rhs, x0=x.ravel(), rtol=CG_RTOL, atol=0.0, maxiter=CG_MAXITER)
    if info != 0:
        raise ConvergenceError(f"conjugate gradients stopped after {info} iterations on the normal equation")
    residual = norm(normal_matvec(solution) - rhs)
    if residual > 1e-8 * max(norm(x), norm(rhs), 1.0):
        raise ConvergenceError(f"normal equation residual {residual:.3e} too large")
    return solution.reshape(shape)


class SquaredResidual(ProxFn):
    """(w/2)‖L· − z‖²; w = 2 gives the plain ‖L· − z‖²."""

    name = "data"

    def __init__(self, operator, observation, weight=1.0):
        if weight <= 0:
            raise ValueError(f"quadratic weight must be positive, got {weight}")
        self.operator = operator
        self.observation = np.asarray(observation, dtype=float)
        self.weight = float(weight)

    def prox(self, x, gamma=1.0):
        return prox_quadratic(self.operator, self.observation, self.weight, x, gamma)

    def objective(self, x):
        return 0.5 * self.weight * norm(self.operator.apply(np.asarray(x, dtype=float)) - self.observation) ** 2


# ============================================================
#   COMPOSITION WITH SEMI-ORTHOGONAL MAPS
# ============================================================

def prox_semiorthogonal(f, operator, x, gamma=1.0, kappa=None):
    """prox_{γ f∘L} x = x + (1/κ) L*(prox_{κγf}(Lx) − Lx) when L∘L* = κ·Id."""
    gamma = check_gamma(gamma)
    if kappa is None:
        kappa = semi_orthogonality_constant(operator)
    lx = operator.apply(np.asarray(x, dtype=float))
    return x + operator.adjoint(f.prox(lx, kappa * gamma) - lx) / kappa


class SemiOrthogonalComposition(ProxFn):
    """
    f∘L for a LinearMap with L∘L* = κ·Id.

    κ is estimated from random probes unless given; the estimate raises
    SemiOrthogonalityError for maps that are not semi-orthogonal.
    """

    def __init__(self, f, operator, kappa=None):
        self.f = f
        self.operator = operator
        self.kappa = float(kappa) if kappa is not None else semi_orthogonality_constant(operator)
        self.domain = DomainKind.FULL if f.domain == DomainKind.FULL else DomainKind.OTHER
        self.name = f"{f.name}∘L"

    def prox(self, x, gamma=1.0):
        return prox_semiorthogonal(self.f, self.operator, x, gamma, kappa=self.kappa)

    def objective(self, x):
        return self.f.objective(self.operator.apply(np.asarray(x, dtype=float)))

    def in_domain(self, x):
        return self.f.in_domain(self.operator.apply(np.asarray(x, dtype=float)))


# ============================================================
#   DISTANCE POTENTIALS
# ============================================================

def distance_gradient(projector, x):
    """∇(d_C²/2)(x) = x − P_C x."""
    x = np.asarray(x, dtype=float)
    return x - projector.project(x)


def distance_shrinkage(distance, a, p, closed_form=True):
    """
    ν ≥ 0 with ν + (ν/(a·p))^{1/(p−1)} = distance, for p > 1.

    Closed forms for p = 3/2 and p = 2; otherwise ν = d − u with u the
    root of u + a·p·u^{p−1} = d.
    """
    if distance == 0.0:
        return 0.0
    if closed_form and p == 1.5:
        # 9a²(√(1 + 16d/(9a²)) − 1)/8 without the cancellation
        return 2.0 * distance / (1.0 + np.sqrt(1.0 + 16.0 * distance / (9.0 * a * a)))
    if closed_form and p == 2.0:
        return 2.0 * a * distance / (2.0 * a + 1.0)
    return distance - solve_power_shrinkage(distance, a, p)


def prox_distance_power(projector, alpha, p, x, gamma=1.0, closed_form=True):
    """prox of γα·d_C^p."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if p < 1:
        raise ValueError(f"exponent must be at least 1, got {p}")
    a = check_gamma(gamma) * alpha
    x = np.asarray(x, dtype=float)
    projected = projector.project(x)
    distance = norm(x - projected)

    if p == 1:
        if distance <= a:
            return projected
        return x + (a / distance) * (projected - x)

    if distance == 0.0:
        return x.copy()
    nu = distance_shrinkage(distance, a, p, closed_form=closed_form)
    return x + (nu / distance) * (projected - x)


class DistancePower(ProxFn):
    """α·d_C^p with α > 0 and p ≥ 1."""

    def __init__(self, projector, alpha=1.0, p=2.0):
        if alpha <= 0:
            raise ValueError(f"alpha must be positive, got {alpha}")
        if p < 1:
            raise ValueError(f"exponent must be at least 1, got {p}")
        self.projector = projector
        self.alpha = float(alpha)
        self.p = float(p)
        self.name = f"d^{self.p:g}_{projector.name}"

    def prox(self, x, gamma=1.0):
        return prox_distance_power(self.projector, self.alpha, self.p, x, gamma)

    def objective(self, x):
        return self.alpha * self.projector.distance(x) ** self.p


def prox_phi_distance(projector, phi, x, gamma=1.0):
    """
    prox of γ·φ∘d_C for an even convex φ differentiable off 0.

    Inside the dead zone d_C(x) ≤ γβ the answer is P_C x; outside, x moves
    toward P_C x by prox_{(γφ)*}(d_C(x)) = γ·prox_{φ*/γ}(d_C(x)/γ).
    """
    gamma = check_gamma(gamma)
    x = np.asarray(x, dtype=float)
    projected = projector.project(x)
    distance = norm(x - projected)
    if distance <= gamma * phi.max_subgrad_at_zero:
        return projected
    step = gamma * float(phi.conjugate_prox(distance / gamma, 1.0 / gamma))
    return x + (step / distance) * (projected - x)


class PhiDistance(ProxFn):
    def __init__(self, projector, phi):
        self.projector = projector
        self.phi = phi
        self.name = f"φ∘d_{projector.name}"

    def prox(self, x, gamma=1.0):
        return prox_phi_distance(self.projector, self.phi, x, gamma)

    def objective(self, x):
        return float(self.phi.value(self.projector.distance(x)))


# ============================================================
#   SEPARABLE POTENTIALS
# ============================================================

def check_orthonormal_basis(basis, tol=1e-10):
    basis = np.asarray(basis, dtype=float)
    if basis.ndim != 2 or basis.shape[0] != basis.shape[1]:
        raise NonOrthonormalBasisError(f"basis must be a square matrix of row vectors, got {basis.shape}")
    gap = float(np.max(np.abs(basis @ basis.T - np.eye(basis.shape[0]))))
    if gap > tol:
        raise NonOrthonormalBasisError(f"basis rows are not orthonormal (max deviation {gap:.3e})")
    return basis


class Separable(ProxFn):
    """
    Σ_k φ_k(⟨x, e_k⟩) over an orthonormal basis (rows of ``basis``).

    ``basis=None`` is the standard basis; a single ScalarConvexFn is used
    for every coordinate.
    """

    name = "separable"

    def __init__(self, scalars, basis=None, size=None):
        self.basis = None if basis is None else check_orthonormal_basis(basis)
        dimension = self.basis.shape[0] if self.basis is not None else size
        if isinstance(scalars, ScalarConvexFn):
            self.scalars = None if dimension is None else [scalars] * dimension
            self.common = scalars
        else:
            self.scalars = list(scalars)
            self.common = None
            if dimension is not None and len(self.scalars) != dimension:
                raise ShapeError(f"{len(self.scalars)} scalar functions for a basis of size {dimension}")

    def _coordinates(self, x):
        flat = np.ravel(x)
        return flat if self.basis is None else self.basis @ flat

    def _synthesize(self, coordinates, shape):
        flat = coordinates if self.basis is None else self.basis.T @ coordinates
        return flat.reshape(shape)

    def prox(self, x, gamma=1.0):
        gamma = check_gamma(gamma)
        x = np.asarray(x, dtype=float)
        coordinates = self._coordinates(x)
        if self.common is not None:
            shrunk = np.asarray(self.common.prox(coordinates, gamma), dtype=float)
        else:
            if len(self.scalars) != coordinates.size:
                raise ShapeError(f"{len(self.scalars)} scalar functions for {coordinates.size} coordinates")
            shrunk = np.array([float(phi.prox(c, gamma)) for phi, c in zip(self.scalars, coordinates)])
        return self._synthesize(shrunk, x.shape)

    def objective(self, x):
        coordinates = self._coordinates(np.asarray(x, dtype=float))
        if self.common is not None:
            return float(np.sum(self.common.value(coordinates)))
        return float(sum(phi.value(c) for phi, c in zip(self.scalars, coordinates)))


def prox_separable(basis, scalars, x, gamma=1.0):
    return Separable(scalars, basis=basis).prox(x, gamma)


def abs_power_separable(alpha, p, basis=None):
    """Σ α|⟨x, e_k⟩|^p."""
    return Separable(AbsPower(alpha, p), basis=basis)
