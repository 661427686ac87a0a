"""Generalized group-theoretic coherent states: standard-form expectation values,
Gauss (BCH) splittings and variational dynamics for spins, bosons and fermions."""

__version__ = "0.1.0"

from .bch import BchFactors, bch_split_generic, triangular_split
from .errors import (
    BranchError,
    ConfigurationError,
    CutoffError,
    DecompositionBreakdown,
    GencsError,
    InputError,
    IntegrationError,
    StalledManifold,
)
from .families import make_family
from .lie import AlgebraSpec, adjoint_action, ad_matrix
from .operators import OperatorExpr
from .standard_form import GenState, expectation, expectations, reduce

__all__ = [
    "AlgebraSpec",
    "BchFactors",
    "BranchError",
    "ConfigurationError",
    "CutoffError",
    "DecompositionBreakdown",
    "GenState",
    "GencsError",
    "InputError",
    "IntegrationError",
    "OperatorExpr",
    "StalledManifold",
    "ad_matrix",
    "adjoint_action",
    "bch_split_generic",
    "expectation",
    "expectations",
    "make_family",
    "reduce",
    "triangular_split",
    "__version__",
]
