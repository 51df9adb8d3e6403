import math

import numpy as np
import pytest

from conftest import random_hp, random_points, random_stable
from hyperreal import classify, rational
from hyperreal.exceptions import (
    DegreeOverflowError,
    ImproperFunctionError,
    PoleAtEvaluationPointError,
    SingularIplusDError,
    ZeroInversionError,
)
from hyperreal.rational import Poly, Realization, SisoRational


def test_parse_number_accepts_fractions():
    assert rational.parse_number("10/9") == pytest.approx(10 / 9, rel=1e-15)
    assert rational.parse_number(" -3/4 ") == -0.75
    assert rational.parse_number(2) == 2.0


def test_poly_trims_trailing_zeros():
    p = Poly([1.0, 2.0, 0.0, 0.0])
    assert p.degree == 1
    assert Poly([0.0]).degree == -1


def test_poly_arithmetic():
    p = Poly([1.0, 1.0])
    q = Poly([-1.0, 1.0])
    assert (p * q).to_list() == [-1.0, 0.0, 1.0]
    assert (p + q).to_list() == [0.0, 2.0]
    quotient, remainder = (p * q).divmod(q)
    assert np.allclose(quotient.coeffs, p.coeffs)
    assert remainder.is_zero


def test_gcd_is_cancelled():
    common = Poly([2.0, 1.0])
    f = SisoRational(Poly([1.0, 1.0]) * common, Poly([3.0, 1.0]) * common)
    assert f.num.degree == 1
    assert np.allclose(f.num.coeffs, [1.0, 1.0])
    assert np.allclose(f.den.coeffs, [3.0, 1.0])
    assert SisoRational(f.num * common, f.den * common, reduce=False).den.degree == 2


def test_midpoint_inverse_of_degree_one_function(f1):
    expected_num = [1 / 15, 2 / 3, 3 / 5]
    expected_den = [1 / 9, 2 / 5, 1.0]
    assert np.max(np.abs(f1.num.coeffs - expected_num)) <= 1e-12
    assert np.max(np.abs(f1.den.coeffs - expected_den)) <= 1e-12


def test_midpoint_inverse_matches_pointwise_formula(f, rng):
    g = f.midpoint_inverse()
    for s in random_points(rng, 20):
        fs = f(s)
        assert g(s) == pytest.approx(1.0 / (0.5 * (fs + 1.0 / fs)), rel=1e-10)


def test_eval_at_infinity(f):
    assert f.eval(math.inf) == pytest.approx(1.0 / 3.0)
    with pytest.raises(PoleAtEvaluationPointError):
        SisoRational.identity().eval(math.inf)
    with pytest.raises(PoleAtEvaluationPointError):
        f.eval(-1.0 / 9.0)


def test_compose_matches_pointwise(rng):
    outer = SisoRational.from_coeffs([1, 2, 1], [3, 1, 1])
    inner = SisoRational.from_coeffs([1, 4], [2, 1])
    g = outer.compose(inner)
    for s in random_points(rng, 20):
        assert g(s) == pytest.approx(outer(inner(s)), rel=1e-9)


def test_invert_zero_function():
    with pytest.raises(ZeroInversionError):
        SisoRational.constant(0.0).invert()


def test_degree_limit():
    p = Poly([1.0, 1.0]).power(40)
    with pytest.raises(DegreeOverflowError):
        p * p


def test_siso_cayley(f, rng):
    g = f.cayley()
    for s in random_points(rng, 10):
        fs = f(s)
        assert g(s) == pytest.approx((1 - fs) / (1 + fs), rel=1e-10)
    with pytest.raises(SingularIplusDError):
        SisoRational.constant(-1.0).cayley()


def test_cayley_of_f1_has_constant_modulus(f1):
    g = f1.cayley()
    omegas = np.logspace(-3, 3, 50)
    assert np.allclose(np.abs(g(1j * omegas)), 0.25, atol=1e-12)


def test_to_realization_matches_transfer_function(f1, rng):
    R = rational.to_realization(f1)
    assert R.n == 2
    for s in random_points(rng, 20):
        assert R(s)[0, 0] == pytest.approx(f1(s), rel=1e-10)


def test_to_realization_needs_proper_function():
    with pytest.raises(ImproperFunctionError):
        rational.to_realization(SisoRational.identity())


def test_to_realization_with_non_monic_denominator(rng):
    # (1 + s)/(1 + 49 s): 1/49 is not exact in floating point
    f = SisoRational(Poly([1.0, 1.0]), Poly([1.0, 49.0]))
    assert f.den.coeffs[-1] == 1.0
    R = rational.to_realization(f)
    assert (R.n, R.m) == (1, 1)
    assert R.D[0, 0] == pytest.approx(1.0 / 49.0, rel=1e-14)
    for s in random_points(rng, 20):
        assert R(s)[0, 0] == pytest.approx(f(s), rel=1e-10)
    assert classify.eta_of(f).hp


def test_reference_realization_matches_f1(R_f1, f1, rng):
    for s in random_points(rng, 20):
        assert R_f1(s)[0, 0] == pytest.approx(f1(s), rel=1e-10)


def test_realization_cayley_is_involutive(rng):
    for _ in range(200):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 3))
        R = random_stable(n, m, rng)
        if np.linalg.svd(np.eye(R.m) + R.D, compute_uv=False)[-1] < 0.05:
            continue
        back = rational.cayley_realization(rational.cayley_realization(R))
        for s in random_points(rng, 3):
            try:
                expected = R(s)
            except PoleAtEvaluationPointError:
                continue
            assert np.max(np.abs(back(s) - expected)) <= 1e-9 * max(1.0, np.max(np.abs(expected)))


def test_realization_cayley_matches_pointwise(rng):
    for _ in range(50):
        R = random_stable(3, 2, rng)
        if np.linalg.svd(np.eye(R.m) + R.D, compute_uv=False)[-1] < 0.05:
            continue
        G = rational.cayley_realization(R)
        s = random_points(rng, 1)[0]
        F = R(s)
        I = np.eye(2)
        expected = (I - F) @ np.linalg.inv(I + F)
        assert np.max(np.abs(G(s) - expected)) <= 1e-8 * max(1.0, np.max(np.abs(expected)))


def test_cayley_realization_singular_feedthrough():
    R = Realization(np.array([[-1.0]]), np.array([[1.0]]), np.array([[1.0]]), np.array([[-1.0]]))
    with pytest.raises(SingularIplusDError):
        rational.cayley_realization(R)


def test_minimize_removes_hidden_modes():
    A = np.diag([-1.0, -2.0])
    R = Realization(A, np.array([[1.0], [0.0]]), np.array([[1.0, 1.0]]), np.array([[0.0]]))
    reduced = rational.minimize(R)
    assert reduced.n == 1
    assert rational.mcmillan_degree(R) == 1
    assert reduced(1j)[0, 0] == pytest.approx(1.0 / (1j + 1.0))


def test_minimize_keeps_minimal_basis(R_f1):
    assert rational.minimize(R_f1) is R_f1


def test_shift_realizes_delayed_argument(R_f1, rng):
    shifted = R_f1.shift(0.05)
    for s in random_points(rng, 5):
        assert shifted(s)[0, 0] == pytest.approx(R_f1(s - 0.05)[0, 0], rel=1e-10)


def test_zeros_and_poles(f1, R_f1):
    assert np.allclose(np.sort_complex(R_f1.poles()), np.sort_complex(f1.poles()))
    assert np.allclose(np.sort_complex(R_f1.zeros()), np.sort_complex(f1.zeros()))


def test_inverse_realization(R_f1, rng):
    inv = rational.invert_realization(R_f1)
    for s in random_points(rng, 5):
        assert inv(s)[0, 0] * R_f1(s)[0, 0] == pytest.approx(1.0)


def test_json_codecs(R_f1, f1):
    again = Realization.from_dict(R_f1.to_dict())
    assert np.allclose(again.array(), R_f1.array())
    assert SisoRational.from_dict({"num": ["1/15", "2/3", "3/5"], "den": ["1/9", "2/5", 1]}).degree == 2
    with pytest.raises(ValueError, match="den"):
        SisoRational.from_dict({"num": [1]})


def test_decode_matrix_layouts():
    flat = rational.decode_matrix([1, 0, 0, 2], 2, 2, "H")
    rows = rational.decode_matrix([[1, 0], [0, 2]], 2, 2, "H")
    pairs = rational.decode_matrix([[1, 0], [0, 0], [0, 0], [2, 0]], 2, 2, "H")
    assert np.allclose(flat, np.diag([1.0, 2.0]))
    assert np.allclose(rows, flat)
    assert np.allclose(pairs, flat)
    with pytest.raises(ValueError, match="H"):
        rational.decode_matrix([1, 2, 3], 2, 2, "H")


def test_cayley_of_inverse_is_negated(rng):
    for _ in range(5):
        R = random_hp(rng, int(rng.integers(1, 4)), int(rng.integers(1, 3)))
        G = rational.cayley_realization(R)
        G_inv = rational.cayley_realization(rational.invert_realization(R))
        for s in random_points(rng, 10):
            assert np.allclose(G_inv(s), -G(s), rtol=1e-9, atol=1e-10)
