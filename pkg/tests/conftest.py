import math

import numpy as np
import pytest

from hyperreal.classify import degree_one_hp, hinf_norm
from hyperreal.config import reset_settings
from hyperreal.rational import Realization, cayley_realization

ETA = 5.0 / 3.0
A_POLE = 1.0 / 9.0
ETA_F1 = 17.0 / 15.0


@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch):
    """Every test starts from the packaged defaults."""
    monkeypatch.delenv("HYPERREAL_TOL", raising=False)
    monkeypatch.delenv("HYPERREAL_CONFIG", raising=False)
    reset_settings()
    yield
    reset_settings()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def f():
    """Degree-one HP_{5/3} function with a = 1/9: (s + 1)/(3 (s + 1/9))."""
    return degree_one_hp(ETA, A_POLE)


@pytest.fixture
def f1(f):
    return f.midpoint_inverse()


@pytest.fixture
def R_f1():
    r6 = math.sqrt(6.0)
    A = np.array([[-1.0, -4.0 / 3.0], [4.0 / 3.0, -1.0]]) / 5.0
    B = np.array([[4.0 / r6], [8.0 / r6]]) / 5.0
    C = np.array([[8.0 / r6, 4.0 / r6]]) / 5.0
    D = np.array([[3.0 / 5.0]])
    return Realization(A, B, C, D)


def random_stable(n: int, m: int, rng: np.random.Generator) -> Realization:
    """Random stable realization with poles in Re s <= -0.2."""
    M = rng.standard_normal((n, n))
    A = M - (np.max(np.linalg.eigvals(M).real) + 0.2 + rng.uniform(0.0, 1.0)) * np.eye(n)
    B = rng.standard_normal((n, m))
    C = rng.standard_normal((m, n))
    D = rng.standard_normal((m, m))
    return Realization(A, B, C, D)


def random_points(rng: np.random.Generator, count: int) -> np.ndarray:
    """Points in the open right half-plane away from the axis."""
    return rng.uniform(0.1, 3.0, count) + 1j * rng.uniform(-3.0, 3.0, count)


def random_hp(rng: np.random.Generator, n: int, m: int) -> Realization:
    """Cayley image of a random stable strict contraction."""
    G = random_stable(n, m, rng)
    scale = rng.uniform(0.3, 0.9) / hinf_norm(G).gamma
    return cayley_realization(Realization(G.A, G.B, scale * G.C, scale * G.D))
