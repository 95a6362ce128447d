"""Discrete Stokes problem and manufactured solutions"""

from .manufactured import CASE_NAMES, ManufacturedCase, manufactured_case, stream_case, zero_case
from .problem import (
    ERROR_NAMES,
    ConvergenceRow,
    StokesSolution,
    convergence_study,
    observed_rates,
    sample_solution,
    solve_stokes,
)

__all__ = [
    "CASE_NAMES",
    "ERROR_NAMES",
    "ConvergenceRow",
    "ManufacturedCase",
    "StokesSolution",
    "convergence_study",
    "manufactured_case",
    "observed_rates",
    "sample_solution",
    "solve_stokes",
    "stream_case",
    "zero_case",
]
