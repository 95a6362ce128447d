"""Numerical stability witnesses for velocity/pressure pairs"""

from .lab import (
    BootstrapReport,
    EquivalenceReport,
    InfSupReport,
    SurjectivityResult,
    bootstrap_check,
    equivalence_check,
    infsup_constant,
    infsup_for_spaces,
    local_infsup_constant,
    refinement_sweep,
    surjectivity_solve,
)

__all__ = [
    "BootstrapReport",
    "EquivalenceReport",
    "InfSupReport",
    "SurjectivityResult",
    "bootstrap_check",
    "equivalence_check",
    "infsup_constant",
    "infsup_for_spaces",
    "local_infsup_constant",
    "refinement_sweep",
    "surjectivity_solve",
]
