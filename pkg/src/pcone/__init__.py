"""Elastic perfectly plastic rate laws through tangent and normal cone projections."""
__version__ = "0.1.0"

from .cone_projection import ConeSplit, project
from .constitutive import DriftPolicy, MaterialState, StrainPath, integrate_path, rate_split, script_h
from .elasticity import ElasticModuli, hooke, hooke_inverse, moduli_from_lame, moduli_from_young
from .errors import NumericalError, PconeError, ValidationError
from .tensor_core import SymTensor3
from .yield_domain import YieldDomain, build_domain, tresca, von_mises

__all__ = [
    "ConeSplit",
    "DriftPolicy",
    "ElasticModuli",
    "MaterialState",
    "NumericalError",
    "PconeError",
    "StrainPath",
    "SymTensor3",
    "ValidationError",
    "YieldDomain",
    "build_domain",
    "hooke",
    "hooke_inverse",
    "integrate_path",
    "moduli_from_lame",
    "moduli_from_young",
    "project",
    "rate_split",
    "script_h",
    "tresca",
    "von_mises",
]
