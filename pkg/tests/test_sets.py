import math

import numpy as np
import pytest

from hyperreal import matcore, sets
from hyperreal.exceptions import DimensionMismatchError, InvalidEtaError
from hyperreal.sets import EtaParam, LyapSetSpec, SteinSetSpec


def _random_eta(rng):
    return float(rng.uniform(1.05, 20.0))


def test_eta_parse():
    assert EtaParam.parse("inf").is_infinite
    assert EtaParam.parse(2).value == 2.0
    assert EtaParam.parse("inf").radius == 1.0
    assert EtaParam(3.0).radius == pytest.approx(math.sqrt(0.5))


@pytest.mark.parametrize("bad", [1.0, 0.5, -3.0, float("nan")])
def test_eta_must_exceed_one(bad):
    with pytest.raises(InvalidEtaError):
        EtaParam(bad)


def test_eta_from_gamma_inverts_radius():
    for eta in (1.01, 17 / 15, 5 / 3, 40.0):
        assert sets.eta_from_gamma(EtaParam(eta).radius) == pytest.approx(eta, rel=1e-12)
    assert math.isinf(sets.eta_from_gamma(1.0))


def test_dimension_mismatch():
    spec = SteinSetSpec.build(np.eye(2), 2.0)
    with pytest.raises(DimensionMismatchError):
        sets.stein_residual(spec, np.eye(3))


def test_stein_weight_inertia(rng):
    for _ in range(200):
        n = int(rng.integers(1, 5))
        w = rng.choice([-1.0, 1.0], n) * rng.uniform(0.5, 3.0, n)
        U = matcore.random_unitary(n, rng)
        spec = SteinSetSpec.build((U * w) @ U.conj().T, _random_eta(rng))
        pos, neg, zero = matcore.inertia(sets.stein_weight(spec))
        assert (pos, neg, zero) == (n, n, 0)


def test_random_members_are_members(rng):
    for _ in range(200):
        n = int(rng.integers(1, 5))
        spec = SteinSetSpec.build(matcore.random_pd(n, rng), _random_eta(rng))
        Ahat = sets.random_stein_member(spec, rng)
        assert sets.stein_member(spec, Ahat)
        assert sets.stein_member_by_norm(spec, Ahat)
        lyap = LyapSetSpec(spec.H, spec.eta)
        assert sets.lyap_member(lyap, sets.random_lyap_member(lyap, rng))


def test_norm_route_agrees_with_residual(rng):
    spec = SteinSetSpec.build(matcore.random_pd(3, rng), 3.0)
    for _ in range(200):
        Z = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        Ahat = Z * rng.uniform(0.05, 1.0) / matcore.spectral_norm(Z)
        margin = spec.eta.radius - sets.similarity_norm(spec.H, Ahat)
        if abs(margin) < 1e-6:
            continue
        assert sets.stein_member(spec, Ahat) == sets.stein_member_by_norm(spec, Ahat)


def test_product_of_members_contracts(rng):
    for _ in range(200):
        n = int(rng.integers(1, 5))
        spec = SteinSetSpec.build(matcore.random_pd(n, rng), _random_eta(rng))
        A1 = sets.random_stein_member(spec, rng)
        A2 = sets.random_stein_member(spec, rng)
        tighter = SteinSetSpec(spec.H, sets.product_contract_eta(spec.eta))
        assert sets.stein_member(tighter, A1 @ A2)


def test_product_contract_eta_value():
    eta = EtaParam(3.0)
    assert sets.product_contract_eta(eta).value == pytest.approx(5.0 / 3.0)
    assert sets.product_contract_eta(eta).radius == pytest.approx(eta.radius**2)


@pytest.mark.parametrize("eta", [1.0 + 1e-8, 1.0 + 1e-12, math.nextafter(1.0, math.inf)])
def test_product_contract_eta_near_one(eta):
    contracted = sets.product_contract_eta(eta)
    assert contracted.value > 1.0
    assert contracted.value <= eta


def test_lyap_set_is_matrix_convex(rng):
    for _ in range(200):
        n = int(rng.integers(1, 5))
        k = int(rng.integers(1, 4))
        spec = LyapSetSpec.build(np.eye(n), _random_eta(rng))
        members = [sets.random_lyap_member(spec, rng) for _ in range(k)]
        iso = matcore.random_isometry(n, k, rng)
        assert sets.lyap_member(spec, matcore.convex_combine(members, iso))


def test_stein_set_is_matrix_convex(rng):
    for _ in range(200):
        n = int(rng.integers(1, 4))
        k = int(rng.integers(1, 4))
        spec = SteinSetSpec.build(np.eye(n), _random_eta(rng))
        members = [sets.random_stein_member(spec, rng) for _ in range(k)]
        iso = matcore.random_isometry(n, k, rng)
        assert sets.stein_member(spec, matcore.convex_combine(members, iso))


def test_cayley_carries_stein_to_lyap(rng):
    for _ in range(200):
        n = int(rng.integers(1, 5))
        H = matcore.random_pd(n, rng)
        eta = EtaParam(_random_eta(rng))
        stein = SteinSetSpec.build(H, eta)
        Ahat = sets.random_stein_member(stein, rng)
        X = np.linalg.inv(np.eye(n) + Ahat)
        expected = (2.0 / eta.value) * X.conj().T @ sets.stein_residual(stein, Ahat).entries @ X
        got = sets.lyap_residual(LyapSetSpec(stein.H, eta), matcore.cayley(Ahat)).entries
        assert np.max(np.abs(got - expected)) <= 1e-9 * max(1.0, np.max(np.abs(expected)))
        assert sets.lyap_member(LyapSetSpec(stein.H, eta), matcore.cayley(Ahat))


def test_cayley_identity_at_infinity(rng):
    H = matcore.random_pd(3, rng)
    stein = SteinSetSpec.build(H, "inf")
    Ahat = sets.random_stein_member(stein, rng)
    X = np.linalg.inv(np.eye(3) + Ahat)
    expected = 2.0 * X.conj().T @ (H - Ahat.conj().T @ H @ Ahat) @ X
    got = sets.lyap_residual(LyapSetSpec.build(H, "inf"), matcore.cayley(Ahat)).entries
    assert np.allclose(got, expected, atol=1e-10)


def test_nested_inclusion(rng):
    report = sets.nested_inclusion_check(matcore.random_pd(3, rng), 1.5, 4.0, 100, rng)
    assert report.failures == 0
    assert report.worst_margin > 0
    assert report.to_dict()["samples"] == 100


def test_nested_inclusion_rejects_reversed_order(rng):
    with pytest.raises(InvalidEtaError):
        sets.nested_inclusion_check(np.eye(2), 4.0, 1.5, 10, rng)


@pytest.mark.parametrize("eta", [1.5, 4.0, "inf"])
def test_lyap_residual_of_inverse(rng, eta):
    spec = LyapSetSpec.build(matcore.random_pd(3, rng), eta)
    for _ in range(20):
        A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        Ai = np.linalg.inv(A)
        expected = Ai.conj().T @ sets.lyap_residual(spec, A).entries @ Ai
        got = sets.lyap_residual(spec, Ai).entries
        assert np.max(np.abs(got - expected)) <= 1e-9 * max(1.0, np.max(np.abs(expected)))
