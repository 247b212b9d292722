"""Dressed (effective) system operators from the non-factorized polaron."""
from .dressing import chain_dressing_n2, kappa_equal, kappa_pair, xi, xi_bruteforce
from .effective import (
    CouplingTerm,
    EffectiveModel,
    PolaronOrder,
    build_chain_effective,
    build_impurity_effective,
    effective_operator,
    factorized_polaron_demo,
    pauli_coefficient,
)
from .quadrature import DEFAULT_QUADRATURE, QuadratureConfig
from .special import dawson

__all__ = [
    "CouplingTerm",
    "DEFAULT_QUADRATURE",
    "EffectiveModel",
    "PolaronOrder",
    "QuadratureConfig",
    "build_chain_effective",
    "build_impurity_effective",
    "chain_dressing_n2",
    "dawson",
    "effective_operator",
    "factorized_polaron_demo",
    "kappa_equal",
    "kappa_pair",
    "pauli_coefficient",
    "xi",
    "xi_bruteforce",
]
