"""
Class membership of rational functions: positive real (P), strictly
positive real (SP), hyper-positive real (HP), and the quantitative classes
HP_eta / HB_eta together with the sharpest eta.

The sharpest eta of F is found on the Cayley side: with
gamma = sup over the right half-plane of ||C(F(s))||_2 one has
eta = (1 + gamma^2)/(1 - gamma^2). C(F) is analytic and bounded there, so
the sup is attained on the imaginary axis (or at infinity) and gamma is an
H-infinity norm, computed by Hamiltonian bisection.
"""

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.optimize

from hyperreal import matcore
from hyperreal.config import SweepOptions, get_settings
from hyperreal.exceptions import (
    InnerNotSPError,
    PoleAtEvaluationPointError,
    SingularDError,
    SingularIplusDError,
    UnstablePolesError,
)
from hyperreal.rational import (
    Poly,
    Realization,
    SisoRational,
    as_realization,
    cayley_realization,
    invert_realization,
    minimize,
)
from hyperreal.sets import EtaParam, LyapSetSpec, eta_from_gamma, lyap_member
from hyperreal.utils import get_logger

logger = get_logger(__name__)

# a pole counts as on the imaginary axis when |Re p| is below this (relative)
POLE_AXIS_TOL = 1e-9

# smallest shift, relative to the pole/zero distance to the axis, accepted as an SP witness
SP_EPS_FLOOR = 1e-6


@dataclass
class ClassVerdict:
    """
    Class flags and the sharpest eta of a function.

    eta_star is None when the function is not hyper-positive. A value of 1.0
    is the infimum for functions (like F = I) lying in HP_eta for every
    eta > 1. Flags left as None were not computed.
    """

    p: bool | None = None
    sp: bool | None = None
    hp: bool | None = None
    eta_star: float | None = None
    gamma: float | None = None
    witness: float | complex | None = None
    witness_kind: str = "frequency"
    method: str = "bisection"
    sp_eps: float | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        witness = self.witness
        if isinstance(witness, complex):
            witness = [witness.real, witness.imag]
        elif witness is not None and math.isinf(witness):
            witness = "inf"
        return {
            "P": self.p,
            "SP": self.sp,
            "HP": self.hp,
            "eta_star": self.eta_star,
            "gamma": self.gamma,
            "witness": witness,
            "witness_kind": self.witness_kind,
            "method": self.method,
            "sp_eps": self.sp_eps,
            "notes": list(self.notes),
        }


@dataclass
class HinfResult:
    gamma: float
    omega: float
    method: str


# frequency response


def response(R: Realization, points) -> np.ndarray:
    """F evaluated at an array of complex points, shape (len(points), m, m)."""
    points = np.atleast_1d(np.asarray(points, dtype=complex))
    out = np.broadcast_to(R.D, (points.size, R.m, R.m)).copy()
    if R.n == 0:
        return out

    w, V = scipy.linalg.eig(R.A)
    if np.linalg.cond(V) < 1e8:
        CV = R.C @ V
        ViB = np.linalg.solve(V, R.B)
        diff = points[:, None] - w[None, :]
        if np.any(np.abs(diff) <= 1e-13 * max(1.0, np.max(np.abs(w)))):
            raise PoleAtEvaluationPointError("A frequency point coincides with a pole")
        out += np.einsum("ik,pk,kj->pij", CV, 1.0 / diff, ViB)
        return out

    # defective A: evaluate point by point
    for idx, s in enumerate(points):
        out[idx] = R.eval(s)
    return out


def frequency_grid(sweep: SweepOptions | None = None) -> np.ndarray:
    sweep = sweep or get_settings().sweep
    return np.concatenate([[0.0], np.logspace(math.log10(sweep.omega_min), math.log10(sweep.omega_max), sweep.points)])


def _sigma_max(values: np.ndarray) -> np.ndarray:
    if values.shape[1] == 1:
        return np.abs(values[:, 0, 0])
    return np.linalg.svd(values, compute_uv=False)[:, 0]


def _golden_refine(fun, omega_best: float, value_best: float, tol: float) -> tuple[float, float]:
    """Maximizes fun around omega_best (golden section on log omega)."""
    if omega_best <= 0.0 or not math.isfinite(omega_best):
        return omega_best, value_best

    def neg(x):
        return -fun(math.exp(x))

    x0 = math.log(omega_best)
    local = np.linspace(x0 - 0.1, x0 + 0.1, 41)
    vals = np.array([-neg(x) for x in local])
    k = int(np.argmax(vals))
    if vals[k] > value_best:
        x0, value_best = float(local[k]), float(vals[k])
    if 0 < k < local.size - 1 and vals[k - 1] < vals[k] and vals[k + 1] < vals[k]:
        try:
            res = scipy.optimize.minimize_scalar(
                neg,
                bracket=(local[k - 1], local[k], local[k + 1]),
                method="golden",
                tol=tol,
            )
            if -res.fun >= value_best:
                return math.exp(float(res.x)), float(-res.fun)
        except ValueError as e:
            logger.debug(f"Golden-section refinement skipped: {e}")
    return math.exp(x0), value_best


# H-infinity norm


def _check_stable(R: Realization) -> None:
    poles = R.poles()
    if poles.size:
        scale = max(1.0, float(np.max(np.abs(poles))))
        worst = poles[np.argmax(poles.real)]
        if worst.real >= -POLE_AXIS_TOL * scale:
            raise UnstablePolesError(f"Pole {worst} is not in the open left half-plane", pole=complex(worst))


def _hamiltonian_crossings(R: Realization, gamma: float) -> np.ndarray:
    """Frequencies where gamma is a singular value of F(i omega)."""
    A, B, C, D = R.A, R.B, R.C, R.D
    m = R.m
    Rg = gamma**2 * np.eye(m) - D.conj().T @ D
    Ri = np.linalg.inv(Rg)
    Ar = A + B @ Ri @ D.conj().T @ C
    Ham = np.block(
        [
            [Ar, B @ Ri @ B.conj().T],
            [-C.conj().T @ (np.eye(m) + D @ Ri @ D.conj().T) @ C, -Ar.conj().T],
        ]
    )
    eigs = scipy.linalg.eigvals(Ham)
    scale = max(1.0, float(np.max(np.abs(eigs))))
    on_axis = eigs[np.abs(eigs.real) <= 1e-8 * scale]
    return np.unique(np.abs(on_axis.imag))


def hinf_norm(R: Realization, sweep: SweepOptions | None = None) -> HinfResult:
    """
    sup over the closed right half-plane of ||F(s)||_2 for a stable F,
    with the peak frequency (inf when the peak is the feedthrough).

    A log-spaced grid seeds the lower bound; Hamiltonian bisection closes the
    gap, and every crossing frequency it finds is evaluated so the reported
    value is always attained. The peak is then refined by golden section.
    """
    sweep = sweep or get_settings().sweep
    R = minimize(R)
    gamma_D = matcore.spectral_norm(R.D)
    if R.n == 0:
        return HinfResult(gamma_D, math.inf, "grid")
    _check_stable(R)

    omegas = frequency_grid(sweep)
    sig = _sigma_max(response(R, 1j * omegas))
    k = int(np.argmax(sig))
    best_omega, best = float(omegas[k]), float(sig[k])
    if gamma_D > best:
        best_omega, best = math.inf, gamma_D

    def sigma_at(omega: float) -> float:
        return float(_sigma_max(response(R, [1j * omega]))[0])

    lo = best
    if lo == 0.0:
        return HinfResult(0.0, best_omega, "bisection")
    hi = 2.0 * lo
    for _ in range(60):
        if _hamiltonian_crossings(R, hi).size == 0:
            break
        hi *= 2.0

    for iteration in range(sweep.max_bisection):
        if hi - lo <= sweep.gamma_tol * max(1.0, lo) * 1e-2:
            break
        mid = 0.5 * (lo + hi)
        crossings = _hamiltonian_crossings(R, mid)
        verified = False
        if crossings.size:
            samples = np.concatenate([crossings, 0.5 * (crossings[1:] + crossings[:-1])])
            vals = _sigma_max(response(R, 1j * samples))
            j = int(np.argmax(vals))
            if vals[j] > best:
                best, best_omega = float(vals[j]), float(samples[j])
            verified = vals[j] >= mid * (1.0 - 1e-8)
        if verified:
            lo = max(mid, best)
        else:
            hi = mid
        logger.debug(f"H-infinity bisection {iteration}: [{lo:.12g}, {hi:.12g}]")

    best_omega, best = _golden_refine(sigma_at, best_omega, best, sweep.golden_tol)
    return HinfResult(best, best_omega, "bisection")


# pointwise eta


def eta_pointwise(Fval) -> float:
    """
    rho((F*F + I)(F* + F)^{-1}) when F* + F is positive definite, else inf.
    Always at least 1.
    """
    F = np.atleast_2d(np.asarray(Fval, dtype=complex))
    S = F.conj().T + F
    if F.shape == (1, 1):
        re = S[0, 0].real
        if re <= 0.0:
            return math.inf
        return float((abs(F[0, 0]) ** 2 + 1.0) / re)
    if not matcore.is_pd(S, tol=0.0):
        return math.inf
    N = F.conj().T @ F + np.eye(F.shape[0])
    return float(scipy.linalg.eigh(N, S, eigvals_only=True)[-1])


def _eta_pointwise_batch(values: np.ndarray) -> np.ndarray:
    if values.shape[1] == 1:
        f = values[:, 0, 0]
        re2 = 2.0 * f.real
        out = np.full(f.shape, np.inf)
        ok = re2 > 0.0
        out[ok] = (np.abs(f[ok]) ** 2 + 1.0) / re2[ok]
        return out
    return np.array([eta_pointwise(v) for v in values])


def in_hp_eta_pointwise(Fval, eta) -> bool:
    """F(s) in L_{I_m}(eta): the pointwise description of HP_eta."""
    F = np.atleast_2d(np.asarray(Fval, dtype=complex))
    spec = LyapSetSpec.build(np.eye(F.shape[0]), eta)
    return lyap_member(spec, F, strict=False)


# sharpest eta


def _grid_eta(R: Realization, sweep: SweepOptions) -> tuple[float, float]:
    omegas = frequency_grid(sweep)
    etas = _eta_pointwise_batch(response(R, 1j * omegas))
    k = int(np.argmax(etas))
    best_omega, best = float(omegas[k]), float(etas[k])
    eta_inf = eta_pointwise(R.D)
    if eta_inf > best:
        return eta_inf, math.inf
    if not math.isfinite(best):
        return best, best_omega

    def eta_at(omega: float) -> float:
        return float(_eta_pointwise_batch(response(R, [1j * omega]))[0])

    best_omega, best = _golden_refine(eta_at, best_omega, best, sweep.golden_tol)
    return best, best_omega


def eta_of(F: Realization | SisoRational, sweep: SweepOptions | None = None) -> ClassVerdict:
    """Sharpest eta with F in HP_eta, and the frequency where it is attained."""
    sweep = sweep or get_settings().sweep
    R = minimize(as_realization(F))

    try:
        _check_stable(R)
    except UnstablePolesError as e:
        logger.info(f"Not hyper-positive: {e}")
        return ClassVerdict(hp=False, witness=e.pole, witness_kind="pole", notes=[str(e)])

    try:
        G = cayley_realization(R)
    except SingularIplusDError:
        logger.info("I + D is singular, falling back to a direct frequency sweep of F")
        eta, omega = _grid_eta(R, sweep)
        if not math.isfinite(eta):
            return ClassVerdict(hp=False, witness=omega, method="grid")
        return ClassVerdict(p=True, sp=True, hp=True, eta_star=eta, witness=omega, method="grid")

    try:
        result = hinf_norm(G, sweep)
    except UnstablePolesError as e:
        note = f"C(F) has pole {e.pole} outside the open left half-plane"
        logger.info(f"Not hyper-positive: {note}")
        return ClassVerdict(hp=False, witness=e.pole, witness_kind="pole", notes=[note])

    if result.gamma >= 1.0 - 1e-12:
        return ClassVerdict(hp=False, gamma=result.gamma, witness=result.omega, method=result.method)
    eta = eta_from_gamma(result.gamma)
    logger.debug(f"eta_of: gamma={result.gamma:.12g} eta={eta:.12g} at omega={result.omega}")
    return ClassVerdict(
        p=True,
        sp=True,
        hp=True,
        eta_star=eta,
        gamma=result.gamma,
        witness=result.omega,
        method=result.method,
    )


# P / SP / HP


def _psd_on_axis(R: Realization, sweep: SweepOptions, axis_poles: np.ndarray) -> tuple[bool, float]:
    """F(i omega) + F(i omega)* >= 0 on the grid (pole neighbourhoods excluded) and at infinity."""
    tol = get_settings().tolerances.tol_psd
    omegas = frequency_grid(sweep)
    if axis_poles.size:
        near = np.any(np.abs(omegas[:, None] - np.abs(axis_poles.imag)[None, :]) <= 1e-6, axis=1)
        omegas = omegas[~near]
    values = response(R, 1j * omegas)
    herm = values + np.conj(np.transpose(values, (0, 2, 1)))
    mins = np.linalg.eigvalsh(herm)[:, 0] if herm.size else np.zeros(0)
    scale = max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0
    worst = float(np.min(mins)) if mins.size else math.inf
    worst = min(worst, matcore.lambda_min(R.D + R.D.conj().T))
    return worst >= -tol * scale, worst


def _is_positive_real(R: Realization, sweep: SweepOptions) -> tuple[bool, str | None]:
    poles = R.poles()
    axis = np.zeros(0, dtype=complex)
    if poles.size:
        scale = max(1.0, float(np.max(np.abs(poles))))
        if np.any(poles.real > POLE_AXIS_TOL * scale):
            return False, None
        axis = poles[np.abs(poles.real) <= POLE_AXIS_TOL * scale]
    ok, _ = _psd_on_axis(R, sweep, axis)
    note = "boundary poles present: residue conditions not checked" if axis.size else None
    return ok, note


def _singular_on_axis(R: Realization, sweep: SweepOptions) -> float | None:
    """
    A finite omega where F(i omega) + F(i omega)* is singular, or None.

    Checks omega = 0 and every interior local minimum of the smallest
    eigenvalue on the grid, refined between the neighbouring grid points.
    """
    tol = get_settings().tolerances.tol_psd
    omegas = frequency_grid(sweep)

    def lam(values: np.ndarray) -> np.ndarray:
        herm = values + np.conj(np.transpose(values, (0, 2, 1)))
        return np.linalg.eigvalsh(herm)[:, 0]

    values = response(R, 1j * omegas)
    mins = lam(values)
    scale = max(1.0, float(np.max(np.abs(values))))
    if mins[0] <= tol * scale:
        return 0.0
    if R.n == 0:
        return None

    # past the last grid value above tolerance the Hermitian part has decayed for good
    last_above = int(np.flatnonzero(mins > tol * scale)[-1])
    interior = np.flatnonzero((mins[1:-1] < mins[:-2]) & (mins[1:-1] <= mins[2:])) + 1
    for k in interior[interior < last_above]:
        res = scipy.optimize.minimize_scalar(
            lambda x: float(lam(response(R, [1j * math.exp(x)]))[0]),
            bounds=(math.log(max(omegas[k - 1], sweep.omega_min)), math.log(omegas[k + 1])),
            method="bounded",
            options={"xatol": sweep.golden_tol},
        )
        if min(float(res.fun), float(mins[k])) <= tol * scale:
            return math.exp(float(res.x))
    return None


def _sp_eps_max(R: Realization) -> float:
    rates = [abs(p.real) for p in R.poles()]
    try:
        rates += [abs(z.real) for z in invert_realization(R).poles()]
    except SingularDError:
        pass
    rates = [r for r in rates if r > 0.0]
    return 0.5 * min(rates) if rates else 1.0


def classify_prs(F: Realization | SisoRational, sweep: SweepOptions | None = None) -> ClassVerdict:
    """P, SP and HP flags plus the sharpest eta."""
    sweep = sweep or get_settings().sweep
    R = minimize(as_realization(F))
    verdict = eta_of(R, sweep)

    p, note = _is_positive_real(R, sweep)
    if note:
        verdict.notes.append(note)

    sp = False
    sp_eps = None
    poles = R.poles()
    on_axis = poles.size and np.any(poles.real >= -POLE_AXIS_TOL * max(1.0, float(np.max(np.abs(poles)))))
    touch = _singular_on_axis(R, sweep) if p and not on_axis else None
    if touch is not None:
        verdict.notes.append(f"F(i omega) + F(i omega)* is singular at omega={touch:.6g}: not SP")
    if p and not on_axis and touch is None:
        eps_max = _sp_eps_max(R)
        feasible, infeasible = None, None
        eps = eps_max
        while eps >= SP_EPS_FLOOR * eps_max:
            if _is_positive_real(R.shift(eps), sweep)[0]:
                feasible = eps
                break
            infeasible = eps
            eps *= 0.5
        if feasible is not None and infeasible is not None:
            for _ in range(20):
                mid = 0.5 * (feasible + infeasible)
                if _is_positive_real(R.shift(mid), sweep)[0]:
                    feasible = mid
                else:
                    infeasible = mid
        sp = feasible is not None
        sp_eps = feasible

    hp = bool(verdict.hp)
    if hp and not (sp and p):
        verdict.notes.append("HP found while the sweep missed SP/P; flags follow HP => SP => P")
        logger.warning(f"Inconsistent sweep for {R.n}-state function: HP={hp} SP={sp} P={p}")
        sp = p = True
    if sp and not p:
        p = True

    verdict.p, verdict.sp, verdict.hp, verdict.sp_eps = p, sp, hp, sp_eps
    return verdict


# HB_eta


@dataclass
class HbMembership:
    member: bool
    gamma: float
    threshold: float
    witness: float | complex | None
    margin: float

    def to_dict(self) -> dict:
        witness = self.witness
        if isinstance(witness, complex):
            witness = [witness.real, witness.imag]
        elif witness is not None and math.isinf(witness):
            witness = "inf"
        return {
            "member": self.member,
            "gamma": self.gamma,
            "threshold": self.threshold,
            "witness": witness,
            "margin": self.margin,
        }


def hb_membership(G: Realization | SisoRational, eta, sweep: SweepOptions | None = None) -> HbMembership:
    """sup ||G(i omega)||_2 <= sqrt((eta-1)/(eta+1)) with all poles in the open left half-plane."""
    eta = EtaParam.parse(eta)
    tol = get_settings().tolerances.tol_eq
    R = minimize(as_realization(G))
    try:
        result = hinf_norm(R, sweep)
    except UnstablePolesError as e:
        return HbMembership(False, math.inf, eta.radius, e.pole, -math.inf)
    margin = eta.radius - result.gamma
    return HbMembership(margin >= -tol, result.gamma, eta.radius, result.omega, margin)


# composition


def _maps_half_plane(h: SisoRational, sweep: SweepOptions) -> bool:
    """h maps the open right half-plane into its closure."""
    tol = get_settings().tolerances.tol_psd
    excess = h.num.degree - h.den.degree
    if excess > 1 or (excess == 1 and h.num.leading / h.den.leading <= 0):
        return False
    poles = h.poles()
    if poles.size and np.any(poles.real > POLE_AXIS_TOL * max(1.0, float(np.max(np.abs(poles))))):
        return False
    omegas = frequency_grid(sweep)
    if poles.size:
        near = np.any(np.abs(omegas[:, None] - np.abs(poles.imag)[None, :]) <= 1e-6, axis=1)
        omegas = omegas[~near]
    values = h(1j * omegas)
    scale = max(1.0, float(np.max(np.abs(values))))
    return bool(np.min(values.real) >= -tol * scale)


@dataclass
class CompositionResult:
    eta_star: float
    eta_outer: float
    witness: float
    within_bound: bool


def composition_eta(F: Realization | SisoRational, h: SisoRational, sweep: SweepOptions | None = None) -> CompositionResult:
    """Sharpest eta of F(h(s)) by sweeping F over the image h(i omega)."""
    sweep = sweep or get_settings().sweep
    R = minimize(as_realization(F))
    if not _maps_half_plane(h, sweep):
        raise InnerNotSPError(f"Inner function does not map the right half-plane into itself: {h}")
    outer = eta_of(R, sweep)
    if outer.eta_star is None:
        raise ValueError(f"Outer function is not hyper-positive (witness {outer.witness})")

    omegas = frequency_grid(sweep)

    def eta_at_points(points: np.ndarray) -> np.ndarray:
        out = np.empty(points.size)
        den = h.den(points)
        pole = np.abs(den) <= 1e-14 * np.maximum(1.0, np.abs(h.num(points)))
        inner = np.where(pole, 0.0, h.num(points) / np.where(pole, 1.0, den))
        out[~pole] = _eta_pointwise_batch(response(R, inner[~pole]))
        out[pole] = eta_pointwise(R.D)
        return out

    etas = eta_at_points(1j * omegas)
    k = int(np.argmax(etas))
    best_omega, best = float(omegas[k]), float(etas[k])
    at_inf = eta_pointwise(R.D) if h.num.degree > h.den.degree else eta_pointwise(R.eval(h.eval(math.inf)))
    if at_inf > best:
        best_omega, best = math.inf, at_inf
    else:
        best_omega, best = _golden_refine(
            lambda w: float(eta_at_points(np.array([1j * w]))[0]), best_omega, best, sweep.golden_tol
        )

    tol = 2 * sweep.gamma_tol
    within = best <= outer.eta_star + tol
    if not within:
        logger.error(f"Composition eta {best} exceeds the outer eta {outer.eta_star}")
    return CompositionResult(best, outer.eta_star, best_omega, within)


# representatives


def degree_one_hp(eta, a: float) -> SisoRational:
    """(eta - sqrt(eta^2-1)) + 2a sqrt(eta^2-1)/(s+a); maps C_R onto D(eta, sqrt(eta^2-1))."""
    eta = EtaParam.parse(eta)
    if eta.is_infinite or a <= 0:
        raise ValueError(f"Need finite eta and a > 0, got eta={eta.value}, a={a}")
    r = math.sqrt(eta.value**2 - 1.0)
    return SisoRational(Poly([(eta.value - r) * a + 2.0 * a * r, eta.value - r]), Poly([a, 1.0]))


def scalar_hb(eta, a: float) -> SisoRational:
    """sqrt((eta-1)/(eta+1)) (s-a)/(s+a); maps C_R onto the closed sub-unit disk."""
    eta = EtaParam.parse(eta)
    rho = eta.radius
    return SisoRational(Poly([-rho * a, rho]), Poly([a, 1.0]))


def reza_degree_two(a: float) -> SisoRational:
    """sqrt(2) a^2/(s+a)^2 + 1/sqrt(2), in HP_sqrt(2) with the peak at s = +-ia."""
    r2 = math.sqrt(2.0)
    den = Poly([a * a, 2.0 * a, 1.0])
    return SisoRational(den.scale(1.0 / r2) + Poly([r2 * a * a]), den)


@dataclass
class DominanceReport:
    contained: bool
    max_excess: float
    points: int


def nyquist_dominated(eta, phi: Realization | SisoRational, sweep: SweepOptions | None = None) -> DominanceReport:
    """
    Power dominance: the image of phi on the imaginary axis lies in the disk
    D(eta, sqrt(eta^2 - 1)), the image of the degree-one representative.
    """
    sweep = sweep or get_settings().sweep
    eta = EtaParam.parse(eta)
    R = minimize(as_realization(phi))
    if R.m != 1:
        raise ValueError("Nyquist dominance is defined for scalar functions")
    omegas = frequency_grid(sweep)
    values = np.concatenate([response(R, 1j * omegas)[:, 0, 0], [R.D[0, 0]]])
    tol = get_settings().tolerances.tol_eq
    if eta.is_infinite:
        # the disks grow into the closed right half-plane
        excess = float(np.max(-values.real))
        return DominanceReport(excess <= tol, excess, int(values.size))
    radius = math.sqrt(eta.value**2 - 1.0)
    excess = float(np.max(np.abs(values - eta.value) - radius))
    return DominanceReport(excess <= tol * max(1.0, eta.value), excess, int(values.size))
