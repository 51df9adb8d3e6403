"""
Dense Hermitian linear-algebra kernels.

Everything here works over complex matrices: real inputs are promoted. The
wrapper types validate shape and, for Hermitian matrices, symmetrize the
entries at construction.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from hyperreal.config import get_settings
from hyperreal.exceptions import (
    DimensionMismatchError,
    NotHermitianError,
    NumericError,
    SingularShiftError,
)


def as_square(M: ArrayLike) -> np.ndarray:
    """Returns M as a complex square ndarray (wrapper types are unwrapped)."""
    if isinstance(M, (SquareMatrix, HermitianMatrix)):
        return M.entries
    arr = np.atleast_2d(np.asarray(M, dtype=complex))
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionMismatchError(f"Expected a square matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True)
class SquareMatrix:
    entries: np.ndarray

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.entries, dtype=complex))
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise DimensionMismatchError(f"SquareMatrix needs an n x n array with n >= 1, got {arr.shape}")
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class HermitianMatrix:
    """
    Square complex matrix stored as (M + M*)/2.

    With strict=True the input must already be Hermitian up to tol_herm
    (relative to its largest entry), otherwise NotHermitianError is raised.
    """

    entries: np.ndarray
    strict: bool = False

    def __post_init__(self):
        arr = np.atleast_2d(np.asarray(self.entries, dtype=complex))
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimensionMismatchError(f"HermitianMatrix needs a square array, got {arr.shape}")
        if self.strict:
            tol = get_settings().tolerances.tol_herm
            scale = max(1.0, float(np.max(np.abs(arr)))) if arr.size else 1.0
            asym = float(np.max(np.abs(arr - arr.conj().T))) if arr.size else 0.0
            if asym > tol * scale:
                raise NotHermitianError(f"Matrix is not Hermitian: max |M - M*| = {asym:.3e}")
        object.__setattr__(self, "entries", 0.5 * (arr + arr.conj().T))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def eigvalsh(self) -> np.ndarray:
        return eigvalsh(self)


@dataclass(frozen=True)
class Isometry:
    """Stacked blocks v_1..v_k (each n x n) with sum v_j* v_j = I_n."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.entries, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] % arr.shape[1] != 0:
            raise DimensionMismatchError(f"Isometry must be (k*n) x n, got {arr.shape}")
        gram = arr.conj().T @ arr
        err = float(np.max(np.abs(gram - np.eye(arr.shape[1])))) if arr.size else 0.0
        if err > 1e-10:
            raise DimensionMismatchError(f"Columns are not orthonormal: max |Y*Y - I| = {err:.3e}")
        object.__setattr__(self, "entries", arr)

    @property
    def n(self) -> int:
        return self.entries.shape[1]

    @property
    def k(self) -> int:
        return self.entries.shape[0] // self.entries.shape[1]

    def blocks(self) -> list[np.ndarray]:
        n = self.n
        return [self.entries[j * n:(j + 1) * n, :] for j in range(self.k)]


class Definiteness(str, Enum):
    POSITIVE_DEFINITE = "PositiveDefinite"
    POSITIVE_SEMIDEFINITE = "PositiveSemidefinite"
    INDEFINITE = "Indefinite"
    NEGATIVE_SEMIDEFINITE = "NegativeSemidefinite"
    NEGATIVE_DEFINITE = "NegativeDefinite"

    @property
    def is_psd(self) -> bool:
        return self in (Definiteness.POSITIVE_DEFINITE, Definiteness.POSITIVE_SEMIDEFINITE)


def hermitian_part(M: ArrayLike) -> np.ndarray:
    arr = as_square(M)
    return 0.5 * (arr + arr.conj().T)


def eigvalsh(M: HermitianMatrix | ArrayLike) -> np.ndarray:
    """Ascending real eigenvalues of the Hermitian part of M."""
    arr = M.entries if isinstance(M, HermitianMatrix) else hermitian_part(M)
    if arr.shape[0] == 0:
        return np.zeros(0)
    try:
        return scipy.linalg.eigvalsh(arr)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericError(f"Hermitian eigensolver failed: {e}") from e


def eigvals(M: ArrayLike) -> np.ndarray:
    arr = as_square(M)
    if arr.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    try:
        return scipy.linalg.eigvals(arr)
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericError(f"Eigensolver failed: {e}") from e


def lambda_min(M: HermitianMatrix | ArrayLike) -> float:
    ev = eigvalsh(M)
    return float(ev[0]) if ev.size else np.inf


def psd_classify(M: HermitianMatrix | ArrayLike, tol: float | None = None) -> Definiteness:
    """
    Classifies M by its extreme eigenvalues against +-tol.

    PD iff lambda_min > tol, PSD iff lambda_min >= -tol, and symmetrically for
    the negative side. An empty matrix is treated as positive definite.
    """
    if tol is None:
        tol = get_settings().tolerances.tol_psd
    ev = eigvalsh(M)
    if ev.size == 0:
        return Definiteness.POSITIVE_DEFINITE
    lo, hi = float(ev[0]), float(ev[-1])
    if lo > tol:
        return Definiteness.POSITIVE_DEFINITE
    if lo >= -tol:
        return Definiteness.POSITIVE_SEMIDEFINITE
    if hi < -tol:
        return Definiteness.NEGATIVE_DEFINITE
    if hi <= tol:
        return Definiteness.NEGATIVE_SEMIDEFINITE
    return Definiteness.INDEFINITE


def is_pd(M, tol: float | None = None) -> bool:
    return psd_classify(M, tol) is Definiteness.POSITIVE_DEFINITE


def is_psd(M, tol: float | None = None) -> bool:
    return psd_classify(M, tol).is_psd


def inertia(M: HermitianMatrix | ArrayLike, tol: float | None = None) -> tuple[int, int, int]:
    """(number positive, number negative, number zero) eigenvalues of M."""
    if tol is None:
        tol = get_settings().tolerances.tol_psd
    ev = eigvalsh(M)
    scale = max(1.0, float(np.max(np.abs(ev)))) if ev.size else 1.0
    pos = int(np.sum(ev > tol * scale))
    neg = int(np.sum(ev < -tol * scale))
    return pos, neg, int(ev.size) - pos - neg


def spectral_norm(M: ArrayLike) -> float:
    arr = np.atleast_2d(np.asarray(M.entries if hasattr(M, "entries") else M, dtype=complex))
    if arr.size == 0:
        return 0.0
    try:
        return float(scipy.linalg.svdvals(arr)[0])
    except (np.linalg.LinAlgError, ValueError) as e:
        raise NumericError(f"SVD failed: {e}") from e


def spectral_radius(M: ArrayLike) -> float:
    ev = eigvals(M)
    return float(np.max(np.abs(ev))) if ev.size else 0.0


def cayley(M: ArrayLike) -> np.ndarray:
    """(I - M)(I + M)^{-1}; involutive on matrices without -1 in the spectrum."""
    arr = as_square(M)
    n = arr.shape[0]
    eye = np.eye(n, dtype=complex)
    shift = eye + arr
    scale = max(1.0, spectral_norm(shift)) ** n
    if abs(np.linalg.det(shift)) <= 1e-12 * scale:
        raise SingularShiftError("-1 is (numerically) an eigenvalue; the Cayley transform is undefined")
    # (I - M) and (I + M)^{-1} commute
    return np.linalg.solve(shift, eye - arr)


def hermitian_sqrt(M: HermitianMatrix | ArrayLike, inverse: bool = False) -> np.ndarray:
    """Principal square root (or its inverse) of a positive definite matrix."""
    arr = M.entries if isinstance(M, HermitianMatrix) else hermitian_part(M)
    w, V = scipy.linalg.eigh(arr)
    if w.size and w[0] <= 0:
        raise NumericError(f"Square root needs a positive definite matrix, lambda_min = {w[0]:.3e}")
    d = w ** (-0.5) if inverse else np.sqrt(w)
    return (V * d) @ V.conj().T


def convex_combine(mats: list[ArrayLike], iso: Isometry) -> np.ndarray:
    """Y* diag(A_1, ..., A_k) Y = sum_j v_j* A_j v_j."""
    blocks = iso.blocks()
    if len(mats) != len(blocks):
        raise DimensionMismatchError(f"{len(mats)} matrices for an isometry with {len(blocks)} blocks")
    out = np.zeros((iso.n, iso.n), dtype=complex)
    for A, v in zip(mats, blocks):
        A = as_square(A)
        if A.shape[0] != iso.n:
            raise DimensionMismatchError(f"Matrix of size {A.shape[0]} for isometry blocks of size {iso.n}")
        out += v.conj().T @ A @ v
    return out


def random_isometry(n: int, k: int, rng: np.random.Generator) -> Isometry:
    Z = rng.standard_normal((k * n, n)) + 1j * rng.standard_normal((k * n, n))
    Q, _ = np.linalg.qr(Z)
    return Isometry(Q)


def random_unitary(n: int, rng: np.random.Generator) -> np.ndarray:
    Z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    Q, R = np.linalg.qr(Z)
    # unit-modulus diagonal of R, Haar measure
    phases = np.diag(R) / np.abs(np.diag(R))
    return Q * phases


def random_pd(n: int, rng: np.random.Generator, cond: float = 10.0) -> np.ndarray:
    """Random Hermitian positive definite matrix with eigenvalues in [1, cond]."""
    U = random_unitary(n, rng)
    w = rng.uniform(1.0, cond, size=n)
    return (U * w) @ U.conj().T
