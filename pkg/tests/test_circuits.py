import math

import numpy as np
import pytest

from conftest import A_POLE, ETA, random_points
from hyperreal import circuits
from hyperreal.circuits import RlcDegreeOne
from hyperreal.classify import ClassVerdict, degree_one_hp, eta_of
from hyperreal.exceptions import InvalidComponentError, NumericError


def test_synthesize_reference_values():
    circuit = circuits.synthesize(ETA, A_POLE)
    assert circuit.R == pytest.approx(8.0 / 3.0, rel=1e-14)
    assert circuit.C == pytest.approx(27.0 / 8.0, rel=1e-14)
    assert circuit.Rs == pytest.approx(1.0 / 3.0, rel=1e-14)


def test_impedance_matches_representative(f, rng):
    Z = circuits.impedance_function(circuits.synthesize(ETA, A_POLE))
    for s in random_points(rng, 20):
        assert Z(s) == pytest.approx(f(s), rel=1e-12)


def test_impedance_is_sharp_hp():
    Z = circuits.impedance_function(circuits.synthesize(ETA, A_POLE))
    assert eta_of(Z).eta_star == pytest.approx(ETA, abs=1e-8)


def test_analyze_roundtrip(rng):
    for _ in range(25):
        eta = float(rng.uniform(1.01, 20.0))
        a = float(10.0 ** rng.uniform(-2.0, 2.0))
        circuit = circuits.synthesize(eta, a)
        Z, eta_back, a_back = circuits.analyze(circuit)
        assert eta_back.value == pytest.approx(eta, rel=1e-12)
        assert a_back == pytest.approx(a, rel=1e-12)
        omegas = 1j * np.logspace(-2, 2, 20)
        assert np.allclose(Z(omegas), circuits.impedance(circuit, omegas), rtol=1e-12)


def test_representative_equals_degree_one_hp():
    rep = circuits.representative(circuits.synthesize(2.5, 0.4))
    target = degree_one_hp(2.5, 0.4)
    for s in (0.3 + 1.0j, 2.0, 5.0j):
        assert rep(s) == pytest.approx(target(s), rel=1e-12)


def test_rs_must_match_normalization():
    with pytest.raises(InvalidComponentError, match="Rs"):
        RlcDegreeOne(R=8.0 / 3.0, C=27.0 / 8.0, Rs=0.5)


@pytest.mark.parametrize("R, C", [(0.0, 1.0), (-1.0, 1.0), (1.0, 0.0), (1.0, math.inf)])
def test_components_must_be_positive(R, C):
    with pytest.raises(InvalidComponentError):
        RlcDegreeOne(R=R, C=C, Rs=1.0)


def test_synthesis_needs_finite_eta_and_positive_pole():
    with pytest.raises(ValueError):
        circuits.synthesize("inf", 1.0)
    with pytest.raises(ValueError):
        circuits.synthesize(2.0, 0.0)


def test_netlist_layout():
    lines = circuits.netlist(circuits.synthesize(ETA, A_POLE)).splitlines()
    assert lines[0].startswith("* ")
    assert [line.split()[0] for line in lines[1:]] == ["Rs", "R", "C"]
    assert float(lines[2].split()[1]) == pytest.approx(8.0 / 3.0)


def test_analyze_cross_checks_sharpest_eta(monkeypatch):
    circuit = circuits.synthesize(ETA, A_POLE)
    monkeypatch.setattr(circuits, "eta_of", lambda Z: ClassVerdict(hp=True, eta_star=ETA * 1.01))
    with pytest.raises(NumericError, match="sharpest eta"):
        circuits.analyze(circuit)
