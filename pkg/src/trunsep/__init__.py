"""Generalized separability of the noisy CZ gate over truncated cubes of Bloch vectors."""

from .pauli_algebra import (
    MAXIMALLY_MIXED,
    BlochVector,
    DomainError,
    TwoQubitOperator,
    apply_cz,
    apply_noisy_cz,
    product_operator,
)
from .state_sets import TruncatedCube, canonical_cases, canonical_form
from .lp_engine import SeparableCertificate, min_noise, simplex_solve
from .threshold_analysis import case_threshold, sweep, verify_certificate
from .hn_simulator import Circuit, build_decomposition_table, estimate, exact_distribution

__all__ = [
    "MAXIMALLY_MIXED",
    "BlochVector",
    "Circuit",
    "DomainError",
    "SeparableCertificate",
    "TruncatedCube",
    "TwoQubitOperator",
    "apply_cz",
    "apply_noisy_cz",
    "build_decomposition_table",
    "canonical_cases",
    "canonical_form",
    "case_threshold",
    "estimate",
    "exact_distribution",
    "min_noise",
    "product_operator",
    "simplex_solve",
    "sweep",
    "verify_certificate",
]
