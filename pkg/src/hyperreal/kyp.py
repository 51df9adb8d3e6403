"""
Kalman-Yakubovich-Popov certificates.

Three matrix conditions are assembled and checked here:

- the Lyapunov-form lemma diag(-H, I) R_F + R_F* diag(-H, I) = Q, whose
  PSD / split / PD cases certify P, SP and HP;
- the quantitative bounded-real form of a realization G, certifying HB_eta;
- the HP_eta quadratic matrix inclusion: the bounded-real form applied to
  the Cayley realization of F, written with the indefinite weight W.

Certificates are searched for through the stabilizing solution of a
Riccati equation (scipy.linalg.solve_continuous_are).
"""

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from hyperreal import matcore
from hyperreal.classify import classify_prs, eta_of, eta_pointwise, hinf_norm
from hyperreal.config import get_settings
from hyperreal.exceptions import (
    DimensionMismatchError,
    HamiltonianImaginaryAxisError,
    NoCertificateError,
)
from hyperreal.matcore import HermitianMatrix
from hyperreal.rational import Realization, SisoRational, as_realization, cayley_realization, minimize
from hyperreal.sets import EtaParam
from hyperreal.utils import get_logger

logger = get_logger(__name__)


class Verdict(str, Enum):
    CERTIFIES_P = "CertifiesP"
    CERTIFIES_SP = "CertifiesSP"
    CERTIFIES_HP = "CertifiesHP"
    CERTIFIES_HP_ETA = "CertifiesHPeta"
    CERTIFIES_HB_ETA = "CertifiesHBeta"
    FAILS = "Fails"


def _encode_rows(M: np.ndarray) -> list:
    M = np.asarray(M, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    if M.size == 0 or float(np.max(np.abs(M.imag))) <= 1e-15 * scale:
        return [[float(x) for x in row] for row in M.real]
    return [[[float(z.real), float(z.imag)] for z in row] for row in M]


@dataclass
class Certificate:
    """
    Outcome of a K-Y-P check.

    For CertifiesSP, `delta` is the isotropic split Q = Q_1 + diag(delta I, 0)
    and `eps_bound` the shift (2 ||H|| / delta)^{-1} it guarantees.
    `singular` flags a residual with a (numerically) zero eigenvalue, which
    is what the sharpest eta produces; it is informational only.
    """

    H: HermitianMatrix
    eta: EtaParam
    residual: HermitianMatrix
    lambda_min: float
    verdict: Verdict
    delta: float | None = None
    eps_bound: float | None = None
    singular: bool = False
    notes: list[str] = field(default_factory=list)

    @property
    def residual_norm(self) -> float:
        return matcore.spectral_norm(self.residual.entries) if self.residual.dim else 0.0

    @property
    def certified(self) -> bool:
        return self.verdict is not Verdict.FAILS

    def to_dict(self) -> dict:
        out = {
            "H": _encode_rows(self.H.entries),
            "eta": self.eta.to_json(),
            "lambda_min": self.lambda_min,
            "verdict": self.verdict.value,
            "residual_norm": self.residual_norm,
            "singular": self.singular,
        }
        if self.delta is not None:
            out["delta"] = self.delta
            out["eps_bound"] = self.eps_bound
        if self.notes:
            out["notes"] = list(self.notes)
        return out


def _as_h(H, n: int) -> HermitianMatrix:
    H = H if isinstance(H, HermitianMatrix) else HermitianMatrix(np.asarray(H, dtype=complex).reshape(n, n) if n else np.zeros((0, 0)))
    if H.dim != n:
        raise DimensionMismatchError(f"H is {H.dim}x{H.dim} but the realization has {n} states")
    return H


def _coefficient(eta: EtaParam) -> float:
    """(1 + eta)/(1 - eta); -1 at eta = inf."""
    if eta.is_infinite:
        return -1.0
    return (1.0 + eta.value) / (1.0 - eta.value)


@dataclass(frozen=True)
class Wmatrix:
    """
    The 2(n+m) Hermitian weight of the quantitative bounded-real form,
    ordered (state, port, state, port):
    [[0, 0, -H, 0], [0, c I_m, 0, 0], [-H, 0, 0, 0], [0, 0, 0, I_m]]
    with c = (1+eta)/(1-eta).
    """

    H: HermitianMatrix
    eta: EtaParam
    m: int

    def __post_init__(self):
        n, m = self.H.dim, self.m
        pos, neg, _ = matcore.inertia(self.entries)
        if matcore.is_pd(self.H) and (pos, neg) != (n + m, n + m):
            raise ValueError(f"W inertia is ({pos}, {neg}), expected ({n + m}, {n + m})")

    @property
    def entries(self) -> np.ndarray:
        n, m = self.H.dim, self.m
        H = self.H.entries
        Znn, Znm, Zmn, Zmm = np.zeros((n, n)), np.zeros((n, m)), np.zeros((m, n)), np.zeros((m, m))
        return np.block(
            [
                [Znn, Znm, -H, Znm],
                [Zmn, _coefficient(self.eta) * np.eye(m), Zmn, Zmm],
                [-H, Znm, Znn, Znm],
                [Zmn, Zmm, Zmn, np.eye(m)],
            ]
        )

    def quadratic_form(self, G: Realization) -> HermitianMatrix:
        """[A B; C D; I 0; 0 I]* W [A B; C D; I 0; 0 I]."""
        n, m = G.n, G.m
        Z = np.block(
            [
                [G.A, G.B],
                [G.C, G.D],
                [np.eye(n), np.zeros((n, m))],
                [np.zeros((m, n)), np.eye(m)],
            ]
        )
        return HermitianMatrix(Z.conj().T @ self.entries @ Z)


def plemma_residual(R: Realization, H) -> HermitianMatrix:
    """Q = diag(-H, I) R_F + R_F* diag(-H, I)."""
    H = _as_h(H, R.n)
    J = scipy.linalg.block_diag(-H.entries, np.eye(R.m))
    RF = R.array()
    return HermitianMatrix(J @ RF + RF.conj().T @ J)


def sp_lemma_residual(R: Realization, H, eps: float) -> HermitianMatrix:
    """Lyapunov-form residual of F(s - eps)."""
    return plemma_residual(R.shift(eps), H)


def brl_residual(G: Realization, H, eta) -> HermitianMatrix:
    """[[-HA - A*H, -HB], [-B*H, I]] - ((eta+1)/(eta-1)) [C D]*[C D]."""
    eta = EtaParam.parse(eta)
    H = _as_h(H, G.n)
    Hm = H.entries
    base = np.block(
        [
            [-Hm @ G.A - G.A.conj().T @ Hm, -Hm @ G.B],
            [-G.B.conj().T @ Hm, np.eye(G.m)],
        ]
    )
    CD = np.hstack([G.C, G.D])
    return HermitianMatrix(base + _coefficient(eta) * (CD.conj().T @ CD))


def qmi_residual(R: Realization, H, eta) -> HermitianMatrix:
    """The HP_eta inclusion: W quadratic form of the Cayley realization of F."""
    eta = EtaParam.parse(eta)
    H = _as_h(H, R.n)
    G = cayley_realization(R)
    return Wmatrix(H, eta, R.m).quadratic_form(G)


@dataclass
class HpMargins:
    eps: float
    delta: float


def hp_margins(Q, H) -> HpMargins:
    """
    With beta = lambda_min(Q)/2 > 0: F(s - eps) - delta I is positive real
    for eps = beta/||H||_2 and delta = beta.
    """
    beta = 0.5 * matcore.lambda_min(Q)
    if not beta > 0.0:
        raise ValueError(f"Q must be positive definite, lambda_min = {2 * beta:.3e}")
    norm_h = matcore.spectral_norm(H)
    return HpMargins(beta / norm_h if norm_h > 0 else math.inf, beta)


def _sp_split(Q: HermitianMatrix, n: int, tol: float) -> float:
    """Largest delta >= 0 with Q - diag(delta I_n, 0) PSD."""
    if n == 0:
        return 0.0
    hi = max(matcore.lambda_min(Q.entries[:n, :n]), 0.0)
    lo = 0.0
    E = np.zeros(Q.entries.shape)
    E[:n, :n] = np.eye(n)
    if hi == 0.0:
        return 0.0
    if matcore.is_psd(Q.entries - hi * E, tol):
        return hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if matcore.is_psd(Q.entries - mid * E, tol):
            lo = mid
        else:
            hi = mid
    return lo


def _is_singular(residual: HermitianMatrix) -> bool:
    ev = matcore.eigvalsh(residual)
    return bool(ev.size) and abs(float(ev[0])) <= 1e-8


def verify_plemma(R: Realization, H) -> Certificate:
    """P / SP / HP certificate from the Lyapunov-form residual."""
    tol = get_settings().tolerances.tol_psd
    H = _as_h(H, R.n)
    Q = plemma_residual(R, H)
    lam = matcore.lambda_min(Q)
    cert = Certificate(H, EtaParam.infinite(), Q, lam, Verdict.FAILS, singular=_is_singular(Q))
    if not matcore.is_pd(H, tol):
        cert.notes.append("H is not positive definite")
        return cert
    if matcore.is_pd(Q, tol):
        cert.verdict = Verdict.CERTIFIES_HP
        return cert
    if not matcore.is_psd(Q, tol):
        return cert
    delta = _sp_split(Q, R.n, tol)
    if delta > tol:
        cert.verdict = Verdict.CERTIFIES_SP
        cert.delta = delta
        cert.eps_bound = delta / (2.0 * matcore.spectral_norm(H))
    else:
        cert.verdict = Verdict.CERTIFIES_P
    return cert


def verify_qmi(R: Realization, H, eta) -> Certificate:
    eta = EtaParam.parse(eta)
    tol = get_settings().tolerances.tol_psd
    H = _as_h(H, R.n)
    residual = qmi_residual(R, H, eta)
    lam = matcore.lambda_min(residual)
    ok = matcore.is_pd(H, tol) and lam >= -tol * max(1.0, matcore.spectral_norm(residual.entries))
    verdict = Verdict.CERTIFIES_HP_ETA if ok else Verdict.FAILS
    return Certificate(H, eta, residual, lam, verdict, singular=_is_singular(residual))


def verify_brl(G: Realization, H, eta) -> Certificate:
    eta = EtaParam.parse(eta)
    tol = get_settings().tolerances.tol_psd
    H = _as_h(H, G.n)
    residual = brl_residual(G, H, eta)
    lam = matcore.lambda_min(residual)
    ok = matcore.is_pd(H, tol) and lam >= -tol * max(1.0, matcore.spectral_norm(residual.entries))
    verdict = Verdict.CERTIFIES_HB_ETA if ok else Verdict.FAILS
    return Certificate(H, eta, residual, lam, verdict, singular=_is_singular(residual))


def verify(R: Realization, H, eta) -> Certificate:
    """Lyapunov-form check at eta = inf, the HP_eta inclusion otherwise."""
    eta = EtaParam.parse(eta)
    if eta.is_infinite:
        return verify_plemma(R, H)
    return verify_qmi(R, H, eta)


# search


def _solve_are(a, b, q, r, s) -> np.ndarray | None:
    q = 0.5 * (q + q.conj().T)
    r = 0.5 * (r + r.conj().T)
    try:
        X = scipy.linalg.solve_continuous_are(a, b, q, r, s=s)
    except (np.linalg.LinAlgError, ValueError) as e:
        logger.debug(f"Riccati solve failed: {e}")
        return None
    if not np.all(np.isfinite(X)):
        return None
    return 0.5 * (X + X.conj().T)


def _bounded_real_riccati(G: Realization, gamma: float) -> np.ndarray | None:
    """
    H with the bounded-real form of G at level gamma PSD, from the
    stabilizing solution X of
    A*X + XA + C*C - (XB + C*D)(D*D - gamma^2 I)^{-1}(B*X + D*C) = 0
    and H = X/gamma^2. None when no ladder step produces a PD H.
    """
    settings = get_settings()
    q0 = G.C.conj().T @ G.C
    r = G.D.conj().T @ G.D - gamma**2 * np.eye(G.m)
    s = G.C.conj().T @ G.D
    scale = max(1.0, matcore.spectral_norm(q0))
    for eps in settings.search_eps_ladder:
        X = _solve_are(G.A, G.B, q0 + eps * scale * np.eye(G.n), r, s)
        if X is None:
            continue
        H = X / gamma**2
        if matcore.is_pd(H, settings.tolerances.tol_psd):
            logger.debug(f"Bounded-real Riccati solved with eps={eps}")
            return H
    return None


def _search_positive_real(R: Realization) -> Certificate:
    settings = get_settings()
    herm_d = R.D + R.D.conj().T
    if not matcore.is_pd(herm_d):
        raise NoCertificateError("D + D* is not positive definite, F is not hyper-positive")
    if R.n == 0:
        return verify_plemma(R, np.zeros((0, 0)))
    for eps in settings.search_eps_ladder:
        X = _solve_are(R.A, R.B, eps * np.eye(R.n), -herm_d, -R.C.conj().T)
        if X is None or not matcore.is_pd(X, settings.tolerances.tol_psd):
            continue
        cert = verify_plemma(R, X)
        if cert.verdict is Verdict.CERTIFIES_HP:
            return cert
    raise NoCertificateError("No positive definite H makes the Lyapunov-form residual positive definite")


def search_H(F: Realization | SisoRational, eta) -> Certificate:
    """
    Searches for H > 0 certifying F in HP_eta (eta finite) or F in HP
    (eta = inf).

    Raises:
        NoCertificateError: eta is below the sharpest eta of F, or F is not
            hyper-positive. The error carries eta_star and the gap.
        HamiltonianImaginaryAxisError: the Riccati equation has no
            stabilizing solution even after nudging eta up by 1e-8.
    """
    eta = EtaParam.parse(eta)
    R = minimize(as_realization(F))
    logger.info(f"Searching K-Y-P certificate: n={R.n} m={R.m} eta={eta.value}")

    if eta.is_infinite:
        if not eta_of(R).hp:
            raise NoCertificateError("F is not hyper-positive")
        return _search_positive_real(R)

    if R.n == 0:
        cert = verify_qmi(R, np.zeros((0, 0)), eta)
        if not cert.certified:
            eta_star = eta_pointwise(R.D)
            raise NoCertificateError(
                f"eta={eta.value} is below the sharpest eta {eta_star}",
                eta_star=eta_star,
                gap=eta_star - eta.value,
            )
        return cert

    verdict = eta_of(R)
    if verdict.eta_star is None:
        raise NoCertificateError("F is not hyper-positive")
    tol = get_settings().tolerances.tol_eq
    if eta.value < verdict.eta_star - tol * verdict.eta_star:
        gap = verdict.eta_star - eta.value
        raise NoCertificateError(
            f"eta={eta.value} is below the sharpest eta {verdict.eta_star:.12g} (gap {gap:.3e})",
            eta_star=verdict.eta_star,
            gap=gap,
        )

    G = cayley_realization(R)
    for attempt_eta in (eta, EtaParam(eta.value * (1.0 + 1e-8))):
        H = _bounded_real_riccati(G, attempt_eta.radius)
        if H is None:
            logger.warning(f"Riccati search failed at eta={attempt_eta.value}, nudging eta up")
            continue
        cert = verify_qmi(R, H, eta)
        if cert.certified:
            return cert
        # certificate found only for the nudged eta
        cert = verify_qmi(R, H, attempt_eta)
        if cert.certified:
            cert.notes.append(f"certified at eta={attempt_eta.value!r}")
            return cert
    raise HamiltonianImaginaryAxisError(
        f"No stabilizing Riccati solution at eta={eta.value} (sharpest eta {verdict.eta_star:.12g})"
    )


def search_hb_certificate(G: Realization | SisoRational, eta) -> Certificate:
    """Bounded-real certificate for G in HB_eta, without the Cayley step."""
    eta = EtaParam.parse(eta)
    G = minimize(as_realization(G))
    if G.n == 0:
        cert = verify_brl(G, np.zeros((0, 0)), eta)
        if not cert.certified:
            raise NoCertificateError(f"||D|| exceeds {eta.radius}")
        return cert

    gamma = hinf_norm(G).gamma
    if gamma > eta.radius * (1.0 + get_settings().tolerances.tol_eq):
        raise NoCertificateError(f"H-infinity norm {gamma:.12g} exceeds {eta.radius:.12g}")
    H = _bounded_real_riccati(G, eta.radius)
    if H is None:
        raise HamiltonianImaginaryAxisError(f"No stabilizing Riccati solution at eta={eta.value}")
    cert = verify_brl(G, H, eta)
    if not cert.certified:
        raise NoCertificateError(f"Riccati solution fails the bounded-real form, lambda_min={cert.lambda_min:.3e}")
    return cert


@dataclass
class HpLimitReport:
    sp: bool
    limit_in_l: bool
    hp: bool

    @property
    def consistent(self) -> bool:
        return self.hp == (self.sp and self.limit_in_l)

    def to_dict(self) -> dict:
        return {"SP": self.sp, "limit_in_L": self.limit_in_l, "HP": self.hp, "consistent": self.consistent}


def hp_iff_sp_plus_limit(F: Realization | SisoRational) -> HpLimitReport:
    """F in HP iff F in SP and F(inf) + F(inf)* is positive definite."""
    R = minimize(as_realization(F))
    verdict = classify_prs(R)
    limit = matcore.is_pd(R.D + R.D.conj().T)
    report = HpLimitReport(bool(verdict.sp), limit, bool(verdict.hp))
    if not report.consistent:
        logger.error(f"HP <=> SP + limit fails: {report.to_dict()}")
    return report
