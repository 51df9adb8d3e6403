"""
Degree-one RC driving-point impedance.

Network: a series resistor Rs followed by R in parallel with C, so
Z(s) = Rs + R/(1 + sRC). Impedances are normalized so that
sqrt(eta^2 - 1) = R/2, which forces Rs = sqrt((R/2)^2 + 1) - R/2.
"""

import math
from dataclasses import dataclass

from hyperreal.classify import degree_one_hp, eta_of
from hyperreal.exceptions import InvalidComponentError, NumericError
from hyperreal.rational import Poly, SisoRational
from hyperreal.sets import EtaParam
from hyperreal.utils import get_logger

logger = get_logger(__name__)

# relative agreement required between the closed-form eta and the swept one
ETA_CHECK_TOL = 1e-6


@dataclass(frozen=True)
class RlcDegreeOne:
    R: float
    C: float
    Rs: float

    def __post_init__(self):
        for name in ("R", "C", "Rs"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidComponentError(f"Component {name} must be positive, got {value}")
        expected = math.sqrt((self.R / 2) ** 2 + 1) - self.R / 2
        if abs(self.Rs - expected) > 1e-12 * max(1.0, expected):
            raise InvalidComponentError(f"Rs={self.Rs} does not match sqrt((R/2)^2 + 1) - R/2 = {expected}")


def synthesize(eta, a: float) -> RlcDegreeOne:
    """Component values whose impedance is the degree-one HP_eta representative."""
    eta = EtaParam.parse(eta)
    if eta.is_infinite:
        raise ValueError("Synthesis needs a finite eta")
    if a <= 0:
        raise ValueError(f"Need a > 0, got a={a}")
    r = math.sqrt(eta.value**2 - 1.0)
    R = 2.0 * r
    # Rs = eta - r, written as 1/(eta + r)
    circuit = RlcDegreeOne(R=R, C=1.0 / (a * R), Rs=1.0 / (eta.value + r))
    logger.debug(f"Synthesized {circuit} for eta={eta.value}, a={a}")
    return circuit


def impedance_function(circuit: RlcDegreeOne) -> SisoRational:
    """Z(s) = Rs + R/(1 + sRC)."""
    R, C, Rs = circuit.R, circuit.C, circuit.Rs
    return SisoRational(Poly([Rs + R, Rs * R * C]), Poly([1.0, R * C]))


def impedance(circuit: RlcDegreeOne, s):
    return circuit.Rs + circuit.R / (1.0 + s * circuit.R * circuit.C)


def analyze(circuit: RlcDegreeOne) -> tuple[SisoRational, EtaParam, float]:
    """
    Impedance with the (eta, a) it represents.

    Raises:
        NumericError: the sharpest eta of the impedance, computed from its
            frequency response, disagrees with the closed form.
    """
    R = circuit.R
    eta = EtaParam(math.sqrt((R / 2) ** 2 + 1.0))
    a = 1.0 / (R * circuit.C)
    Z = impedance_function(circuit)
    eta_star = eta_of(Z).eta_star
    if eta_star is None or abs(eta_star - eta.value) > ETA_CHECK_TOL * eta.value:
        raise NumericError(f"Impedance of {circuit} has sharpest eta {eta_star}, expected {eta.value:.12g}")
    return Z, eta, a


def representative(circuit: RlcDegreeOne) -> SisoRational:
    _, eta, a = analyze(circuit)
    return degree_one_hp(eta, a)


def netlist(circuit: RlcDegreeOne) -> str:
    _, eta, a = analyze(circuit)
    return "\n".join(
        [
            f"* degree-one HP_eta impedance: eta={eta.value!r} a={a!r}",
            f"Rs {circuit.Rs!r}",
            f"R {circuit.R!r}",
            f"C {circuit.C!r}",
        ]
    )
