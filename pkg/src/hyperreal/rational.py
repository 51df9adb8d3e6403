"""
Rational functions

Scalar functions are ratios of real polynomials (`SisoRational`); matrix
valued ones are carried only as state-space realizations (`Realization`),
F(s) = C (sI - A)^{-1} B + D, without a pole at infinity.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import numpy.polynomial.polynomial as P
import scipy.linalg
from numpy.typing import ArrayLike

from hyperreal import matcore
from hyperreal.config import get_settings
from hyperreal.exceptions import (
    DegreeOverflowError,
    DimensionMismatchError,
    ImproperFunctionError,
    PoleAtEvaluationPointError,
    SingularDError,
    SingularIplusDError,
    ZeroInversionError,
)
from hyperreal.utils import get_logger

logger = get_logger(__name__)


def parse_number(raw) -> float:
    """Accepts ints, floats and exact "p/q" strings."""
    if isinstance(raw, str):
        return float(Fraction(raw.strip()))
    return float(raw)


def _check_degree(degree: int) -> None:
    limit = get_settings().max_degree
    if degree > limit:
        raise DegreeOverflowError(f"Polynomial degree {degree} exceeds the limit of {limit}")


@dataclass(frozen=True, eq=False)
class Poly:
    """Real polynomial, coefficients in ascending degree, trailing zeros trimmed."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs))
        if np.iscomplexobj(c):
            if np.max(np.abs(c.imag), initial=0.0) > 1e-12 * max(1.0, np.max(np.abs(c), initial=0.0)):
                raise ValueError("Poly coefficients must be real")
            c = c.real
        c = np.asarray(c, dtype=float)
        if c.size == 0:
            c = np.zeros(1)
        nz = np.flatnonzero(c)
        c = c[: nz[-1] + 1] if nz.size else np.zeros(1)
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def from_list(cls, values) -> "Poly":
        return cls(np.array([parse_number(v) for v in values], dtype=float))

    @property
    def degree(self) -> int:
        """Degree; the zero polynomial reports -1."""
        return -1 if self.is_zero else self.coeffs.size - 1

    @property
    def is_zero(self) -> bool:
        return self.coeffs.size == 1 and self.coeffs[0] == 0.0

    @property
    def leading(self) -> float:
        return float(self.coeffs[-1])

    def __call__(self, s):
        return P.polyval(s, self.coeffs)

    def __add__(self, other: "Poly") -> "Poly":
        return Poly(P.polyadd(self.coeffs, other.coeffs))

    def __sub__(self, other: "Poly") -> "Poly":
        return Poly(P.polysub(self.coeffs, other.coeffs))

    def __mul__(self, other: "Poly") -> "Poly":
        _check_degree(self.degree + other.degree)
        return Poly(P.polymul(self.coeffs, other.coeffs))

    def __neg__(self) -> "Poly":
        return Poly(-self.coeffs)

    def scale(self, c: float) -> "Poly":
        return Poly(c * self.coeffs)

    def power(self, k: int) -> "Poly":
        _check_degree(max(self.degree, 0) * k)
        return Poly(P.polypow(self.coeffs, k)) if k > 0 else Poly([1.0])

    def monic(self) -> "Poly":
        if self.is_zero:
            return self
        c = self.coeffs / self.coeffs[-1]
        c[-1] = 1.0
        return Poly(c)

    def divmod(self, other: "Poly") -> tuple["Poly", "Poly"]:
        if other.is_zero:
            raise ZeroDivisionError("Polynomial division by zero")
        q, r = P.polydiv(self.coeffs, other.coeffs)
        return Poly(q), Poly(r)

    def roots(self) -> np.ndarray:
        if self.degree < 1:
            return np.zeros(0, dtype=complex)
        return P.polyroots(self.coeffs)

    def to_list(self) -> list[float]:
        return [float(c) for c in self.coeffs]

    def __repr__(self) -> str:
        return f"Poly({self.to_list()})"


def poly_gcd(a: Poly, b: Poly, tol: float | None = None) -> Poly:
    """
    Monic gcd by the Euclidean algorithm. A remainder whose coefficients are
    all below tol times the largest coefficient in play counts as zero.
    """
    if tol is None:
        tol = get_settings().tolerances.gcd_tol
    if a.is_zero:
        return b.monic() if not b.is_zero else Poly([1.0])
    if b.is_zero:
        return a.monic()
    a, b = a.monic(), b.monic()
    if a.degree < b.degree:
        a, b = b, a
    while not b.is_zero and b.degree > 0:
        _, r = a.divmod(b)
        scale = max(np.max(np.abs(a.coeffs)), np.max(np.abs(b.coeffs)))
        if np.max(np.abs(r.coeffs)) <= tol * scale:
            return b
        a, b = b, r.monic()
    # b is a nonzero constant: coprime
    return Poly([1.0])


@dataclass(frozen=True, eq=False)
class SisoRational:
    """
    num(s)/den(s) with the gcd removed and den monic.

    The constructor normalizes; pass reduce=False to keep a common factor.
    """

    num: Poly
    den: Poly
    reduce: bool = True

    def __post_init__(self):
        num = self.num if isinstance(self.num, Poly) else Poly(np.asarray(self.num))
        den = self.den if isinstance(self.den, Poly) else Poly(np.asarray(self.den))
        if den.is_zero:
            raise ZeroDivisionError("SisoRational denominator is identically zero")
        if num.is_zero:
            num, den = Poly([0.0]), Poly([1.0])
        elif self.reduce:
            g = poly_gcd(num, den)
            if g.degree > 0:
                num, _ = num.divmod(g)
                den, _ = den.divmod(g)
        object.__setattr__(self, "num", Poly(num.coeffs / den.leading))
        object.__setattr__(self, "den", den.monic())

    @classmethod
    def constant(cls, c: float) -> "SisoRational":
        return cls(Poly([c]), Poly([1.0]))

    @classmethod
    def from_coeffs(cls, num, den) -> "SisoRational":
        return cls(Poly.from_list(num), Poly.from_list(den))

    @classmethod
    def identity(cls) -> "SisoRational":
        return cls(Poly([0.0, 1.0]), Poly([1.0]))

    @property
    def degree(self) -> int:
        """McMillan degree of the reduced ratio."""
        return max(self.num.degree, self.den.degree, 0)

    @property
    def is_proper(self) -> bool:
        return self.num.degree <= self.den.degree

    def __call__(self, s):
        return self.eval(s)

    def eval(self, s):
        """num(s)/den(s); s may be an array or math.inf."""
        if np.isscalar(s) and not isinstance(s, complex) and math.isinf(s):
            if not self.is_proper:
                raise PoleAtEvaluationPointError("Improper function has a pole at infinity")
            if self.num.degree < self.den.degree:
                return 0.0
            return self.num.leading / self.den.leading
        den = self.den(s)
        scale = np.abs(P.polyval(np.abs(s), np.abs(self.den.coeffs)))
        if np.any(np.abs(den) <= 1e-14 * np.maximum(scale, 1e-300)):
            raise PoleAtEvaluationPointError(f"Evaluation point {s} is a pole")
        return self.num(s) / den

    def __add__(self, other) -> "SisoRational":
        other = _as_siso(other)
        return SisoRational(self.num * other.den + other.num * self.den, self.den * other.den)

    __radd__ = __add__

    def __sub__(self, other) -> "SisoRational":
        return self + (-_as_siso(other))

    def __rsub__(self, other) -> "SisoRational":
        return _as_siso(other) - self

    def __mul__(self, other) -> "SisoRational":
        other = _as_siso(other)
        return SisoRational(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __neg__(self) -> "SisoRational":
        return SisoRational(-self.num, self.den)

    def scale(self, c: float) -> "SisoRational":
        return SisoRational(self.num.scale(c), self.den)

    def invert(self) -> "SisoRational":
        if self.num.is_zero:
            raise ZeroInversionError("Cannot invert the zero function")
        return SisoRational(self.den, self.num)

    def compose(self, inner: "SisoRational") -> "SisoRational":
        """self(inner(s)) by exact polynomial substitution."""
        inner = _as_siso(inner)
        N = max(self.num.degree, self.den.degree, 0)
        _check_degree(N * max(inner.num.degree, inner.den.degree, 0))
        n_pows = [inner.num.power(i) for i in range(N + 1)]
        d_pows = [inner.den.power(i) for i in range(N + 1)]

        def substitute(p: Poly) -> Poly:
            out = Poly([0.0])
            for i, c in enumerate(p.coeffs):
                if c != 0.0:
                    out = out + (n_pows[i] * d_pows[N - i]).scale(c)
            return out

        return SisoRational(substitute(self.num), substitute(self.den))

    def midpoint_inverse(self) -> "SisoRational":
        """(1/2 (f + 1/f))^{-1} = 2 num den / (num^2 + den^2)."""
        return SisoRational(
            (self.num * self.den).scale(2.0),
            self.num * self.num + self.den * self.den,
        )

    def cayley(self) -> "SisoRational":
        """(1 - f)/(1 + f) = (den - num)/(den + num)."""
        total = self.den + self.num
        if total.is_zero:
            raise SingularIplusDError("f is identically -1, its Cayley transform is undefined")
        return SisoRational(self.den - self.num, total)

    def poles(self) -> np.ndarray:
        return self.den.roots()

    def zeros(self) -> np.ndarray:
        return self.num.roots()

    def to_dict(self) -> dict:
        return {"num": self.num.to_list(), "den": self.den.to_list()}

    @classmethod
    def from_dict(cls, data: dict) -> "SisoRational":
        try:
            return cls.from_coeffs(data["num"], data["den"])
        except KeyError as e:
            raise ValueError(f"SisoRational JSON is missing field {e}") from e

    def __repr__(self) -> str:
        return f"SisoRational(num={self.num.to_list()}, den={self.den.to_list()})"


def _as_siso(value) -> SisoRational:
    if isinstance(value, SisoRational):
        return value
    return SisoRational.constant(float(value))


def _as_block(value, rows: int, cols: int, name: str) -> np.ndarray:
    arr = np.asarray(value, dtype=complex).reshape(rows, cols) if np.size(value) == rows * cols else None
    if arr is None:
        raise DimensionMismatchError(f"{name} must be {rows}x{cols}, got shape {np.shape(value)}")
    return arr


@dataclass(frozen=True, eq=False)
class Realization:
    """State-space quadruple; n states, m ports."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def __post_init__(self):
        D = np.atleast_2d(np.asarray(self.D, dtype=complex))
        if D.shape[0] != D.shape[1]:
            raise DimensionMismatchError(f"D must be square, got {D.shape}")
        m = D.shape[0]
        n = int(np.size(self.A) ** 0.5) if np.size(self.A) else 0
        A = _as_block(self.A, n, n, "A")
        B = _as_block(self.B, n, m, "B")
        C = _as_block(self.C, m, n, "C")
        for name, value in (("A", A), ("B", B), ("C", C), ("D", D)):
            object.__setattr__(self, name, value)

    @classmethod
    def static(cls, D: ArrayLike) -> "Realization":
        D = np.atleast_2d(np.asarray(D, dtype=complex))
        m = D.shape[0]
        return cls(np.zeros((0, 0)), np.zeros((0, m)), np.zeros((m, 0)), D)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.D.shape[0]

    def array(self) -> np.ndarray:
        """The (n+m) x (n+m) realization array [[A, B], [C, D]]."""
        return np.block([[self.A, self.B], [self.C, self.D]])

    def __call__(self, s) -> np.ndarray:
        return self.eval(s)

    def eval(self, s) -> np.ndarray:
        if not isinstance(s, complex) and np.isscalar(s) and math.isinf(s):
            return self.D.copy()
        if self.n == 0:
            return self.D.copy()
        shifted = s * np.eye(self.n) - self.A
        smin = scipy.linalg.svdvals(shifted)[-1]
        if smin <= 1e-13 * max(1.0, abs(s), matcore.spectral_norm(self.A)):
            raise PoleAtEvaluationPointError(f"Evaluation point {s} is a pole of the realization")
        return self.C @ np.linalg.solve(shifted, self.B) + self.D

    def poles(self) -> np.ndarray:
        return matcore.eigvals(self.A)

    def zeros(self) -> np.ndarray:
        """Transmission zeros, eig(A - B D^{-1} C); needs an invertible D."""
        return invert_realization(self).poles()

    def shift(self, eps: float) -> "Realization":
        """Realization of F(s - eps)."""
        return Realization(self.A + eps * np.eye(self.n), self.B, self.C, self.D)

    def similarity(self, T: ArrayLike) -> "Realization":
        T = matcore.as_square(T)
        Ti = np.linalg.inv(T)
        return Realization(Ti @ self.A @ T, Ti @ self.B, self.C @ T, self.D)

    def to_dict(self) -> dict:
        def encode(M):
            return [[float(z.real), float(z.imag)] for z in np.asarray(M).ravel()]

        return {"n": self.n, "m": self.m, "A": encode(self.A), "B": encode(self.B), "C": encode(self.C), "D": encode(self.D)}

    @classmethod
    def from_dict(cls, data: dict) -> "Realization":
        try:
            n, m = int(data["n"]), int(data["m"])
            blocks = {}
            for name, rows, cols in (("A", n, n), ("B", n, m), ("C", m, n), ("D", m, m)):
                blocks[name] = decode_matrix(data[name], rows, cols, name)
        except KeyError as e:
            raise ValueError(f"Realization JSON is missing field {e}") from e
        return cls(**blocks)


def _decode_entry(value, name: str) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise ValueError(f"Entry of {name} must be a number or a [re, im] pair, got {value!r}")
        return complex(parse_number(value[0]), parse_number(value[1]))
    return complex(parse_number(value))


def decode_matrix(values, rows: int, cols: int, name: str) -> np.ndarray:
    values = list(values)
    if rows * cols == 0:
        return np.zeros((rows, cols), dtype=complex)
    # canonical layout: flat row-major list of numbers or [re, im] pairs
    if len(values) == rows * cols:
        try:
            flat = [_decode_entry(v, name) for v in values]
            return np.array(flat, dtype=complex).reshape(rows, cols)
        except (TypeError, ValueError):
            pass
    # also accepted: a list of rows
    if len(values) == rows and all(isinstance(v, (list, tuple)) and len(v) == cols for v in values):
        return np.array([[_decode_entry(x, name) for x in row] for row in values], dtype=complex)
    raise ValueError(f"Field {name} must hold {rows}x{cols} entries in row-major order")


def evaluate(F: Realization | SisoRational, s):
    """F(s) for either representation."""
    return F.eval(s)


def _orth_range(M: np.ndarray, tol: float) -> np.ndarray:
    if M.size == 0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    U, S, _ = scipy.linalg.svd(M, full_matrices=False)
    if S.size == 0 or S[0] == 0.0:
        return np.zeros((M.shape[0], 0), dtype=complex)
    return U[:, S > tol * S[0]]


def _krylov(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    blocks = []
    block = B
    for _ in range(A.shape[0]):
        norm = np.linalg.norm(block)
        blocks.append(block / norm if norm > 0 else block)
        block = A @ blocks[-1]
    return np.hstack(blocks)


def minimize(R: Realization, tol: float | None = None) -> Realization:
    """Kalman reduction to the controllable, then observable, part."""
    if tol is None:
        tol = get_settings().tolerances.rank_tol
    if R.n == 0:
        return R

    # a minimal realization keeps its state basis
    A, B, C = R.A, R.B, R.C
    T = _orth_range(_krylov(A, B), tol)
    if T.shape[1] < A.shape[0]:
        A, B, C = T.conj().T @ A @ T, T.conj().T @ B, C @ T
    if A.shape[0] == 0:
        return Realization.static(R.D)

    T = _orth_range(_krylov(A.conj().T, C.conj().T), tol)
    if T.shape[1] < A.shape[0]:
        A, B, C = T.conj().T @ A @ T, T.conj().T @ B, C @ T
    if A.shape[0] == R.n:
        return R
    logger.debug(f"Kalman reduction: {R.n} -> {A.shape[0]} states")
    if A.shape[0] == 0:
        return Realization.static(R.D)
    return Realization(A, B, C, R.D)


def mcmillan_degree(F: Realization | SisoRational) -> int:
    if isinstance(F, SisoRational):
        return F.degree
    return minimize(F).n


def to_realization(f: SisoRational) -> Realization:
    """Controllable canonical form of a proper scalar function, then reduced."""
    if not f.is_proper:
        raise ImproperFunctionError(f"Function has a pole at infinity: {f}")
    n = max(f.den.degree, 0)
    den = f.den.coeffs
    d = f.num.coeffs[n] / den[n] if f.num.degree == n else 0.0
    if n == 0:
        return Realization.static([[f.num.coeffs[0] / den[0]]])

    r = (f.num - f.den.scale(d)).coeffs
    r = r[:n]
    r = np.concatenate([r, np.zeros(n - r.size)])
    A = np.zeros((n, n))
    A[np.arange(n - 1), np.arange(1, n)] = 1.0
    A[-1, :] = -den[:n] / den[n]
    B = np.zeros((n, 1))
    B[-1, 0] = 1.0
    C = r.reshape(1, n)
    return minimize(Realization(A, B, C, [[d]]))


def cayley_realization(R: Realization) -> Realization:
    """
    Realization of C(F) = 2(F + I)^{-1} - I:
    Ahat = A - B(I+D)^{-1}C, Bhat = -sqrt(2) B(I+D)^{-1},
    Chat = sqrt(2)(I+D)^{-1}C, Dhat = (I+D)^{-1}(I-D).
    """
    eye = np.eye(R.m)
    shift = eye + R.D
    if scipy.linalg.svdvals(shift)[-1] <= 1e-12 * max(1.0, matcore.spectral_norm(R.D)):
        raise SingularIplusDError("-1 is an eigenvalue of D; the realization Cayley transform is undefined")
    inv = np.linalg.inv(shift)
    root2 = math.sqrt(2.0)
    return Realization(
        R.A - R.B @ inv @ R.C,
        -root2 * R.B @ inv,
        root2 * inv @ R.C,
        inv @ (eye - R.D),
    )


def invert_realization(R: Realization) -> Realization:
    """(A - B D^{-1} C, B D^{-1}, -D^{-1} C, D^{-1})."""
    if scipy.linalg.svdvals(R.D)[-1] <= 1e-12 * max(1.0, matcore.spectral_norm(R.D)):
        raise SingularDError("D is singular, F^{-1} has a pole at infinity")
    Di = np.linalg.inv(R.D)
    return Realization(R.A - R.B @ Di @ R.C, R.B @ Di, -Di @ R.C, Di)


def as_realization(F: Realization | SisoRational) -> Realization:
    return F if isinstance(F, Realization) else to_realization(F)
