"""
Absolute stability of Lurie loops and the difference-inclusion bound.

A Lurie loop is a scalar plant h(s) in negative feedback with a memoryless,
possibly time-varying nonlinearity psi(t, y) confined to the sector
(K y - psi)(psi - k y) >= 0. The circle criterion certifies absolute
stability when (1 + K h)/(1 + k h) is strictly positive real; for
0 < k <= K the same test reads through the degree-one HP_eta representative.

Simulations only corroborate a certificate, they never replace it.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import scipy.linalg
import scipy.optimize
from tqdm import tqdm

from hyperreal import matcore
from hyperreal.classify import ClassVerdict, classify_prs, degree_one_hp
from hyperreal.exceptions import (
    IllPosedLoopError,
    ImproperFunctionError,
    NonpositiveSectorError,
)
from hyperreal.rational import Poly, SisoRational, to_realization
from hyperreal.sets import EtaParam, SteinSetSpec, random_stein_member, stein_member
from hyperreal.utils import get_logger

logger = get_logger(__name__)

SECTOR_SAMPLES = 10_000
DIVERGENCE_NORM = 1e12


@dataclass(frozen=True)
class Sector:
    k: float
    K: float

    def __post_init__(self):
        object.__setattr__(self, "k", float(self.k))
        object.__setattr__(self, "K", float(self.K))
        if self.K < self.k:
            raise ValueError(f"Sector needs K >= k, got k={self.k}, K={self.K}")

    @property
    def is_positive(self) -> bool:
        return math.isfinite(self.K) and self.k > 0

    def violation(self, y, psi) -> np.ndarray:
        """max(0, -(K y - psi)(psi - k y)) relative to the local scale."""
        y = np.asarray(y, dtype=float)
        psi = np.asarray(psi, dtype=float)
        value = (self.K * y - psi) * (psi - self.k * y)
        scale = np.maximum(1.0, max(abs(self.k), abs(self.K), 1.0) ** 2 * y * y)
        return np.maximum(0.0, -value / scale)

    def contains(self, other: "Sector", tol: float = 1e-12) -> bool:
        return other.k >= self.k - tol and other.K <= self.K + tol


@dataclass(frozen=True)
class Nonlinearity:
    """
    Named sector nonlinearity psi(t, y), vectorized over numpy arrays.

    The sector bound is sampled at construction on SECTOR_SAMPLES random
    (t, y) pairs spanning six decades of |y|.
    """

    name: str
    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    sector: Sector
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        rng = np.random.default_rng(0)
        t = rng.uniform(0.0, 1e3, SECTOR_SAMPLES)
        y = rng.choice([-1.0, 1.0], SECTOR_SAMPLES) * 10.0 ** rng.uniform(-3.0, 3.0, SECTOR_SAMPLES)
        worst = float(np.max(self.sector.violation(y, self.func(t, y))))
        if worst > 1e-12:
            raise ValueError(f"Nonlinearity {self.name} leaves sector ({self.sector.k}, {self.sector.K}): {worst:.3e}")

    def __call__(self, t, y):
        return self.func(t, y)

    def to_dict(self) -> dict:
        return {"name": self.name, "k": self.sector.k, "K": self.sector.K, **self.params}


def linear_gain(c: float) -> Nonlinearity:
    return Nonlinearity("linear", lambda t, y: c * np.asarray(y, dtype=float), Sector(c, c), {"gain": c})


def saturation(sector: Sector, level: float = 1.0) -> Nonlinearity:
    """k y + (K - k) clip(y, -level, level)."""
    k, K = sector.k, sector.K

    def psi(t, y):
        y = np.asarray(y, dtype=float)
        return k * y + (K - k) * np.clip(y, -level, level)

    return Nonlinearity("saturation", psi, sector, {"level": level})


def deadzone(sector: Sector, width: float = 1.0) -> Nonlinearity:
    """k y inside the dead band, slope K outside it."""
    k, K = sector.k, sector.K

    def psi(t, y):
        y = np.asarray(y, dtype=float)
        return k * y + (K - k) * (y - np.clip(y, -width, width))

    return Nonlinearity("deadzone", psi, sector, {"width": width})


def time_varying_gain(sector: Sector, omega: float = 1.0) -> Nonlinearity:
    """Gain sweeping [k, K] as (k + (K-k)(1 + sin(omega t))/2)."""
    k, K = sector.k, sector.K

    def psi(t, y):
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        return (k + (K - k) * 0.5 * (1.0 + np.sin(omega * t))) * y

    return Nonlinearity("time_varying_gain", psi, sector, {"omega": omega})


NONLINEARITIES = {
    "saturation": saturation,
    "deadzone": deadzone,
    "time_varying_gain": time_varying_gain,
}


def nonlinearity_library(sector: Sector) -> list[Nonlinearity]:
    """Representatives spanning the sector, used for corroborating simulations."""
    return [
        linear_gain(sector.k),
        linear_gain(0.5 * (sector.k + sector.K)),
        saturation(sector),
        deadzone(sector),
        time_varying_gain(sector),
    ]


@dataclass(frozen=True)
class LurieLoop:
    plant: SisoRational
    sector: Sector
    nonlinearity: Nonlinearity | None = None

    def __post_init__(self):
        if not self.plant.is_proper:
            raise ImproperFunctionError(f"Plant has a pole at infinity: {self.plant}")
        if self.nonlinearity is not None and not self.sector.contains(self.nonlinearity.sector):
            raise ValueError(
                f"Nonlinearity sector ({self.nonlinearity.sector.k}, {self.nonlinearity.sector.K}) "
                f"is not inside ({self.sector.k}, {self.sector.K})"
            )


@dataclass(frozen=True)
class DifferenceInclusion:
    """
    x(k+1) = A(k) x(k) with every A(k) in Stein_{I_n}(eta).

    `generator(step, x, rng)` picks A(k); by default a fresh random member.
    """

    eta: EtaParam
    n: int
    generator: Callable[[int, np.ndarray, np.random.Generator], np.ndarray] | None = None

    def __post_init__(self):
        eta = EtaParam.parse(self.eta)
        if eta.is_infinite:
            raise ValueError("The difference-inclusion bound needs a finite eta")
        object.__setattr__(self, "eta", eta)

    @property
    def spec(self) -> SteinSetSpec:
        return SteinSetSpec.build(np.eye(self.n), self.eta)

    def draw(self, step: int, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        if self.generator is None:
            A = random_stein_member(self.spec, rng)
        else:
            A = np.atleast_2d(np.asarray(self.generator(step, x, rng), dtype=complex))
        if not stein_member(self.spec, A):
            raise ValueError(f"Step {step}: generated matrix is not in Stein_I({self.eta.value})")
        return A


# circle criterion


def circle_transform(sector: Sector) -> SisoRational:
    """f(s) = (1 + K s)/(1 + k s)."""
    if sector.k == sector.K:
        logger.info(f"Degenerate sector k = K = {sector.k}: the loop is linear")
    return SisoRational(Poly([1.0, sector.K]), Poly([1.0, sector.k]))


def circle_transform_eta(sector: Sector) -> tuple[SisoRational, EtaParam, float]:
    """
    The criterion function for 0 < k <= K < inf written as the degree-one
    HP_eta representative: eta = (sqrt(K/k) + sqrt(k/K))/2, a = 1/K.
    It equals sqrt(K/k) (1 + k s)/(1 + K s).
    """
    if sector.k <= 0:
        raise NonpositiveSectorError(f"Sector needs k > 0, got k={sector.k}")
    if not math.isfinite(sector.K):
        raise NonpositiveSectorError("Sector needs a finite K")
    beta = math.sqrt(sector.K / sector.k)
    eta = EtaParam(0.5 * (beta + 1.0 / beta))
    a = 1.0 / sector.K
    return degree_one_hp(eta, a), eta, a


def closed_loop_matrix(plant: SisoRational, c: float) -> np.ndarray:
    """State matrix of h in feedback with the constant gain u = -c y."""
    R = to_realization(plant)
    d = R.D[0, 0]
    if abs(1.0 + c * d) <= 1e-12:
        raise IllPosedLoopError(f"1 + c D = 0 for c={c}, D={d}: algebraic loop has no solution")
    return (R.A - R.B @ R.C * (c / (1.0 + c * d))).real if R.n else np.zeros((0, 0))


@dataclass
class StabilityReport:
    criterion_holds: bool
    route: str
    verdict: ClassVerdict | None = None
    route_ii_holds: bool | None = None
    eta: float | None = None
    a: float | None = None
    closed_loop_poles: list[complex] | None = None
    notes: list[str] = field(default_factory=list)

    @property
    def label(self) -> str:
        if self.criterion_holds:
            return "absolutely stable (circle criterion)" if self.route == "circle" else "stable (linear loop)"
        return "inconclusive (criterion not met)" if self.route == "circle" else "unstable (linear loop)"

    def to_dict(self) -> dict:
        out = {
            "criterion_holds": self.criterion_holds,
            "route": self.route,
            "label": self.label,
            "route_ii_holds": self.route_ii_holds,
            "eta": self.eta,
            "a": self.a,
            "notes": list(self.notes),
        }
        if self.verdict is not None:
            out["verdict"] = self.verdict.to_dict()
        if self.closed_loop_poles is not None:
            out["closed_loop_poles"] = [[p.real, p.imag] for p in self.closed_loop_poles]
        return out


def absolute_stability_check(loop: LurieLoop) -> StabilityReport:
    """
    Circle criterion: absolutely stable whenever (1 + K h)/(1 + k h) is SP.
    For 0 < k < K the equivalent HP_eta form is checked too. k = K is a
    linear loop decided by the closed-loop eigenvalues.
    """
    sector = loop.sector
    if sector.k == sector.K:
        poles = matcore.eigvals(closed_loop_matrix(loop.plant, sector.k))
        holds = bool(np.all(poles.real < 0.0))
        return StabilityReport(holds, "lti", closed_loop_poles=[complex(p) for p in poles])

    f = circle_transform(sector)
    fh = f.compose(loop.plant)
    verdict = classify_prs(fh)
    report = StabilityReport(bool(verdict.sp), "circle", verdict)

    if sector.is_positive:
        f_eta, eta, a = circle_transform_eta(sector)
        report.eta, report.a = eta.value, a
        try:
            report.route_ii_holds = bool(classify_prs(f_eta.compose(loop.plant)).sp)
        except ImproperFunctionError as e:
            report.notes.append(f"HP_eta route skipped: {e}")
        if report.route_ii_holds is not None and report.route_ii_holds != report.criterion_holds:
            logger.warning(f"Circle-criterion routes disagree for plant {loop.plant}")
    return report


# simulation


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    psi: np.ndarray
    diverged: bool = False
    label: str = "corroboration"

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.x, axis=1) if self.x.size else np.zeros(self.t.size)

    @property
    def sup_norm(self) -> float:
        return float(np.max(self.norms)) if self.t.size else 0.0

    @property
    def final_norm(self) -> float:
        return float(self.norms[-1]) if self.t.size else 0.0

    def decay_rate(self) -> float | None:
        """-slope of log ||x(t)|| over the second half of the run."""
        norms = self.norms
        half = self.t.size // 2
        t, v = self.t[half:], norms[half:]
        ok = v > 1e-300
        if np.count_nonzero(ok) < 2:
            return None
        slope, _ = np.polyfit(t[ok], np.log(v[ok]), 1)
        return float(-slope)

    def to_dict(self) -> dict:
        return {
            "steps": int(self.t.size - 1),
            "T": float(self.t[-1]) if self.t.size else 0.0,
            "sup_norm": self.sup_norm,
            "initial_norm": float(self.norms[0]) if self.t.size else 0.0,
            "final_norm": self.final_norm,
            "decay_rate": self.decay_rate(),
            "diverged": self.diverged,
            "label": self.label,
        }


def default_step(plant: SisoRational) -> float:
    """1e-3 times the fastest plant time constant."""
    poles = plant.poles()
    fastest = float(np.max(np.abs(poles))) if poles.size else 1.0
    return 1e-3 / max(fastest, 1e-12)


def rk4_step(f, x: np.ndarray, t: float, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of x' = f(t, x)."""
    k0 = f(t, x)
    k1 = f(t + 0.5 * dt, x + 0.5 * dt * k0)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + dt, x + dt * k2)
    return x + dt / 6.0 * (k0 + 2.0 * k1 + 2.0 * k2 + k3)


def simulate_lurie(loop: LurieLoop, x0, T: float, dt: float | None = None) -> Trajectory:
    """
    Fixed-step RK4 of x' = A x - B psi(t, y), y = C x - D psi(t, y).

    With D != 0 the output equation is solved for y at every evaluation;
    it has a unique root when 1 + D c > 0 for every slope c in the sector.
    """
    if loop.nonlinearity is None:
        raise ValueError("simulate_lurie needs a nonlinearity")
    R = to_realization(loop.plant)
    A, B, C = R.A.real, R.B.real[:, 0], R.C.real[0, :]
    d = float(R.D.real[0, 0])
    psi = loop.nonlinearity
    sector = psi.sector
    x = np.asarray(x0, dtype=float).reshape(R.n)
    dt = dt or default_step(loop.plant)
    if dt <= 0:
        raise ValueError(f"Step must be positive, got dt={dt}")

    monotone = min(1.0 + d * sector.k, 1.0 + d * sector.K)
    if d != 0.0 and monotone <= 0.0:
        raise IllPosedLoopError(f"Output equation y + D psi(y) = Cx is not solvable uniquely (D={d})")

    def output(t: float, x: np.ndarray) -> tuple[float, float]:
        cx = float(C @ x) if R.n else 0.0
        if d == 0.0:
            return cx, float(psi(t, cx))
        if cx == 0.0:
            return 0.0, float(psi(t, 0.0))
        bound = abs(cx) / monotone * (1.0 + 1e-9) + 1e-300
        y = scipy.optimize.brentq(lambda y: y + d * float(psi(t, y)) - cx, -bound, bound, xtol=1e-15, rtol=1e-14)
        return y, float(psi(t, y))

    def rhs(t: float, x: np.ndarray) -> np.ndarray:
        _, p = output(t, x)
        return A @ x - B * p

    steps = int(math.ceil(T / dt))
    logger.info(f"Simulating Lurie loop with {psi.name}: n={R.n} T={T} dt={dt:.3e} steps={steps}")
    ts = np.zeros(steps + 1)
    xs = np.zeros((steps + 1, R.n))
    ys = np.zeros(steps + 1)
    ps = np.zeros(steps + 1)
    xs[0] = x
    ys[0], ps[0] = output(0.0, x)
    diverged = False
    last = steps
    for i in range(steps):
        t = i * dt
        x = rk4_step(rhs, x, t, dt)
        ts[i + 1] = t + dt
        xs[i + 1] = x
        ys[i + 1], ps[i + 1] = output(t + dt, x)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) > DIVERGENCE_NORM:
            logger.warning(f"Trajectory diverged at t={t + dt:.4g}")
            diverged = True
            last = i + 1
            break
    return Trajectory(ts[: last + 1], xs[: last + 1], ys[: last + 1], ps[: last + 1], diverged)


def write_trajectory_csv(traj: Trajectory, path: str | Path) -> Path:
    """Columns t, x_1..x_n, y, psi with a header row."""
    path = Path(path)
    data = {"t": traj.t}
    for j in range(traj.x.shape[1]):
        data[f"x_{j + 1}"] = traj.x[:, j]
    data["y"] = traj.y
    data["psi"] = traj.psi
    pd.DataFrame(data).to_csv(path, index=False)
    logger.info(f"Trajectory written to {path}")
    return path


@dataclass
class InclusionRun:
    norms: np.ndarray
    bounds: np.ndarray
    violations: int
    worst_ratio: float

    def to_dict(self) -> dict:
        return {
            "steps": int(self.norms.size - 1),
            "violations": self.violations,
            "worst_ratio": self.worst_ratio,
            "final_norm": float(self.norms[-1]),
            "final_bound": float(self.bounds[-1]),
        }


def simulate_difference_inclusion(
    di: DifferenceInclusion,
    x0,
    steps: int,
    rng: np.random.Generator,
) -> InclusionRun:
    """Runs the inclusion and checks ||x(k)|| <= ||x(0)|| r^k with r = sqrt((eta-1)/(eta+1))."""
    x = np.asarray(x0, dtype=complex).reshape(di.n)
    r = di.eta.radius
    norms = np.zeros(steps + 1)
    norms[0] = np.linalg.norm(x)
    for k in range(steps):
        x = di.draw(k, x, rng) @ x
        norms[k + 1] = np.linalg.norm(x)
    bounds = norms[0] * r ** np.arange(steps + 1)
    excess = norms - bounds * (1.0 + 1e-12)
    violations = int(np.count_nonzero(excess > 1e-300))
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(bounds > 0, norms / np.where(bounds > 0, bounds, 1.0), 0.0)
    return InclusionRun(norms, bounds, violations, float(np.max(ratios)))


@dataclass
class InclusionSummary:
    eta: float
    n: int
    steps: int
    seeds: int
    violations: int
    worst_ratio: float

    def to_dict(self) -> dict:
        return {
            "eta": self.eta,
            "n": self.n,
            "steps": self.steps,
            "seeds": self.seeds,
            "violations": self.violations,
            "worst_ratio": self.worst_ratio,
        }


def monte_carlo_difference_inclusion(
    eta,
    n: int,
    steps: int,
    seeds: int,
    base_seed: int,
    progress: bool = False,
) -> InclusionSummary:
    """One seeded run per seed in base_seed .. base_seed + seeds - 1."""
    di = DifferenceInclusion(EtaParam.parse(eta), n)
    violations = 0
    worst = 0.0
    for seed in tqdm(range(base_seed, base_seed + seeds), desc="seeds", disable=not progress):
        rng = np.random.default_rng(seed)
        x0 = rng.standard_normal(n) + 1j * rng.standard_normal(n)
        run = simulate_difference_inclusion(di, x0, steps, rng)
        violations += run.violations
        worst = max(worst, run.worst_ratio)
    if violations:
        logger.warning(f"{violations} bound violations over {seeds} seeds")
    return InclusionSummary(di.eta.value, n, steps, seeds, violations, worst)


def linear_response(A: np.ndarray, x0, t: float) -> np.ndarray:
    """expm(A t) x0, the closed form for a linear loop."""
    return scipy.linalg.expm(np.asarray(A) * t) @ np.asarray(x0, dtype=float)
