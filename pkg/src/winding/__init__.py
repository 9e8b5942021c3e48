"""Winding-domain geometry, growth-lemma constants and a strip-chart elliptic solver."""

__version__ = "0.1.0"

from . import constants, errors, geometry, montecarlo, operator, solver
from .geometry import (CurvePair, DomainPoint, DomainSpec, custom_curves, example_a, example_b,
                       example_c, validate_domain)
from .constants import (EllipticityData, GrowthConstants, UnboundedConstants, annulus_constants,
                        classify_sequence, general_eta)
from .operator import CoefficientField, laplacian, rotated, const_drift, logangular_drift
from .solver import BoundaryData, StripGrid, solve_problem

__all__ = [
    "constants", "errors", "geometry", "montecarlo", "operator", "solver",
    "CurvePair", "DomainPoint", "DomainSpec", "custom_curves", "example_a", "example_b",
    "example_c", "validate_domain", "EllipticityData", "GrowthConstants", "UnboundedConstants",
    "annulus_constants", "classify_sequence", "general_eta", "CoefficientField", "laplacian",
    "rotated", "const_drift", "logangular_drift", "BoundaryData", "StripGrid", "solve_problem",
]
