"""Exact computation with submeasures on finite Boolean algebras and on product spaces."""

from .algebra import CylinderSet, CylinderSpace, FiniteAlgebra
from .cover import DSet, min_weight_cover
from .errors import MaharamError
from .submeasure import Submeasure, validate
from .transform import SignedMeasure, StarFreeAlgebra, solve_signed_measure
from .weights import ExactWeight, Schedule, compare, psi_cylinder, psi_total

__all__ = [
    "CylinderSet",
    "CylinderSpace",
    "DSet",
    "ExactWeight",
    "FiniteAlgebra",
    "MaharamError",
    "Schedule",
    "SignedMeasure",
    "StarFreeAlgebra",
    "Submeasure",
    "compare",
    "min_weight_cover",
    "psi_cylinder",
    "psi_total",
    "solve_signed_measure",
    "validate",
]
