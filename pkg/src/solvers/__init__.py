"""Local divergence solver on barycentric splits"""

from .local_div import (
    DivSolveReport,
    FinalCorrection,
    LayerDecomposition,
    StepResult,
    constant_field,
    decompose,
    final_correction,
    norm_equivalence_ratio,
    random_pressure,
    solve_local_div,
    step,
)

__all__ = [
    "DivSolveReport",
    "FinalCorrection",
    "LayerDecomposition",
    "StepResult",
    "constant_field",
    "decompose",
    "final_correction",
    "norm_equivalence_ratio",
    "random_pressure",
    "solve_local_div",
    "step",
]
