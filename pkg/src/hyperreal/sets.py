"""
Stein and Lyapunov matricial sets.

Stein_H(eta) holds the matrices Ahat with (eta-1)H - (eta+1)Ahat* H Ahat
positive definite; L_H(eta) holds the matrices A with
-(1/eta)A* H A + A* H + H A - (1/eta)H positive definite. At eta = inf they
degenerate to the plain Stein and Lyapunov inclusions, handled as their own
code path. The Cayley transform maps one family onto the other.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from hyperreal import matcore
from hyperreal.exceptions import DimensionMismatchError, InvalidEtaError
from hyperreal.matcore import HermitianMatrix
from hyperreal.utils import get_logger

logger = get_logger(__name__)


@dataclass(frozen=True)
class EtaParam:
    """Quantitative class index eta in (1, inf]; infinity is explicit."""

    value: float

    def __post_init__(self):
        value = float(self.value)
        if math.isnan(value) or value <= 1.0:
            raise InvalidEtaError(f"eta must exceed 1, got {self.value}")
        object.__setattr__(self, "value", value)

    @classmethod
    def infinite(cls) -> "EtaParam":
        return cls(math.inf)

    @classmethod
    def parse(cls, raw) -> "EtaParam":
        if isinstance(raw, EtaParam):
            return raw
        if isinstance(raw, str) and raw.strip().lower() in ("inf", "infinity", "oo"):
            return cls.infinite()
        return cls(float(raw))

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    @property
    def radius(self) -> float:
        """sqrt((eta-1)/(eta+1)), the contraction threshold (1 at eta = inf)."""
        if self.is_infinite:
            return 1.0
        return math.sqrt((self.value - 1.0) / (self.value + 1.0))

    def to_json(self):
        return "inf" if self.is_infinite else self.value


def eta_from_gamma(gamma: float) -> float:
    """Inverse of gamma = sqrt((eta-1)/(eta+1)); returns inf for gamma >= 1."""
    if gamma >= 1.0:
        return math.inf
    g2 = gamma * gamma
    return (1.0 + g2) / (1.0 - g2)


@dataclass(frozen=True)
class SteinSetSpec:
    H: HermitianMatrix
    eta: EtaParam = field(default_factory=EtaParam.infinite)

    @classmethod
    def build(cls, H: ArrayLike, eta) -> "SteinSetSpec":
        return cls(H if isinstance(H, HermitianMatrix) else HermitianMatrix(H), EtaParam.parse(eta))


@dataclass(frozen=True)
class LyapSetSpec:
    H: HermitianMatrix
    eta: EtaParam = field(default_factory=EtaParam.infinite)

    @classmethod
    def build(cls, H: ArrayLike, eta) -> "LyapSetSpec":
        return cls(H if isinstance(H, HermitianMatrix) else HermitianMatrix(H), EtaParam.parse(eta))


def _check_dims(H: HermitianMatrix, A: np.ndarray) -> None:
    if H.dim != A.shape[0]:
        raise DimensionMismatchError(f"H is {H.dim}x{H.dim} but the matrix is {A.shape[0]}x{A.shape[0]}")


def stein_weight(spec: SteinSetSpec) -> HermitianMatrix:
    """diag(-(eta+1)H, (eta-1)H); diag(-H, H) at eta = inf."""
    H = spec.H.entries
    Z = np.zeros_like(H)
    if spec.eta.is_infinite:
        return HermitianMatrix(np.block([[-H, Z], [Z, H]]))
    eta = spec.eta.value
    return HermitianMatrix(np.block([[-(eta + 1) * H, Z], [Z, (eta - 1) * H]]))


def stein_residual(spec: SteinSetSpec, Ahat: ArrayLike) -> HermitianMatrix:
    A = matcore.as_square(Ahat)
    _check_dims(spec.H, A)
    H = spec.H.entries
    quad = A.conj().T @ H @ A
    if spec.eta.is_infinite:
        return HermitianMatrix(H - quad)
    eta = spec.eta.value
    return HermitianMatrix((eta - 1) * H - (eta + 1) * quad)


def lyap_residual(spec: LyapSetSpec, A: ArrayLike) -> HermitianMatrix:
    A = matcore.as_square(A)
    _check_dims(spec.H, A)
    H = spec.H.entries
    lin = H @ A + A.conj().T @ H
    if spec.eta.is_infinite:
        return HermitianMatrix(lin)
    inv_eta = 1.0 / spec.eta.value
    return HermitianMatrix(lin - inv_eta * (A.conj().T @ H @ A) - inv_eta * H)


def stein_member(spec: SteinSetSpec, Ahat: ArrayLike, strict: bool = True, tol: float | None = None) -> bool:
    residual = stein_residual(spec, Ahat)
    return matcore.is_pd(residual, tol) if strict else matcore.is_psd(residual, tol)


def lyap_member(spec: LyapSetSpec, A: ArrayLike, strict: bool = True, tol: float | None = None) -> bool:
    residual = lyap_residual(spec, A)
    return matcore.is_pd(residual, tol) if strict else matcore.is_psd(residual, tol)


def similarity_norm(H: HermitianMatrix, Ahat: ArrayLike) -> float:
    """||H^{1/2} Ahat H^{-1/2}||_2 for positive definite H."""
    A = matcore.as_square(Ahat)
    _check_dims(H, A)
    root = matcore.hermitian_sqrt(H)
    inv_root = matcore.hermitian_sqrt(H, inverse=True)
    return matcore.spectral_norm(root @ A @ inv_root)


def stein_member_by_norm(spec: SteinSetSpec, Ahat: ArrayLike) -> bool:
    """Membership through the similarity-norm bound; H must be positive definite."""
    return similarity_norm(spec.H, Ahat) < spec.eta.radius


def product_contract_eta(eta: EtaParam) -> EtaParam:
    """(eta + 1/eta)/2: the index of products of two Stein_H(eta) members."""
    eta = EtaParam.parse(eta)
    if eta.is_infinite:
        return eta
    value = 1.0 + (eta.value - 1.0) ** 2 / (2.0 * eta.value)
    return EtaParam(max(value, math.nextafter(1.0, math.inf)))


def random_stein_member(
    spec: SteinSetSpec,
    rng: np.random.Generator,
    shrink: float = 1e-3,
) -> np.ndarray:
    """
    Draws Ahat = r * H^{-1/2} G H^{1/2} * (1 - shrink) with ||G||_2 uniform in
    [0, 1) and r the Stein radius. H must be positive definite.
    """
    n = spec.H.dim
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    G = Z / matcore.spectral_norm(Z) * rng.uniform(0.0, 1.0)
    root = matcore.hermitian_sqrt(spec.H)
    inv_root = matcore.hermitian_sqrt(spec.H, inverse=True)
    return spec.eta.radius * (inv_root @ G @ root) * (1.0 - shrink)


def random_lyap_member(spec: LyapSetSpec, rng: np.random.Generator, shrink: float = 1e-3) -> np.ndarray:
    """Cayley image of a random Stein_H(eta) member."""
    Ahat = random_stein_member(SteinSetSpec(spec.H, spec.eta), rng, shrink)
    return matcore.cayley(Ahat)


@dataclass
class InclusionReport:
    eta_small: float
    eta_large: float
    samples: int
    failures: int
    worst_margin: float

    def to_dict(self) -> dict:
        return {
            "eta_small": self.eta_small,
            "eta_large": "inf" if math.isinf(self.eta_large) else self.eta_large,
            "samples": self.samples,
            "failures": self.failures,
            "worst_margin": self.worst_margin,
        }


def nested_inclusion_check(
    H: ArrayLike,
    eta_small,
    eta_large,
    samples: int,
    rng: np.random.Generator,
) -> InclusionReport:
    """Samples members of Stein_H(eta_small) and checks them against Stein_H(eta_large)."""
    small = SteinSetSpec.build(H, eta_small)
    large = SteinSetSpec.build(H, eta_large)
    if small.eta.value > large.eta.value:
        raise InvalidEtaError(f"eta_small={small.eta.value} exceeds eta_large={large.eta.value}")

    logger.info(f"Checking Stein_H({small.eta.value}) inside Stein_H({large.eta.value}) over {samples} samples")
    failures = 0
    worst = math.inf
    for _ in range(samples):
        Ahat = random_stein_member(small, rng)
        margin = matcore.lambda_min(stein_residual(large, Ahat))
        worst = min(worst, margin)
        if not stein_member(large, Ahat):
            failures += 1
    if failures:
        logger.warning(f"{failures} of {samples} samples fell outside the larger set")
    return InclusionReport(small.eta.value, large.eta.value, samples, failures, worst)
