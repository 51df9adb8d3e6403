"""Hyper-positive real (HP_eta) and hyper-bounded (HB_eta) rational functions."""

from hyperreal.classify import ClassVerdict, classify_prs, composition_eta, eta_of, hb_membership, hinf_norm
from hyperreal.kyp import Certificate, Verdict, search_H, verify
from hyperreal.rational import Realization, SisoRational
from hyperreal.sets import EtaParam

__version__ = "0.1.0"

__all__ = [
    "Certificate",
    "ClassVerdict",
    "EtaParam",
    "Realization",
    "SisoRational",
    "Verdict",
    "classify_prs",
    "composition_eta",
    "eta_of",
    "hb_membership",
    "hinf_norm",
    "search_H",
    "verify",
]
