"""Dense linear algebra and operator export"""

from .dense import (
    condition_number,
    generalized_symmetric_eig,
    is_symmetric,
    least_squares,
    matrix_rank,
    null_space,
    solve_spd,
    solve_symmetric_indefinite,
)
from .matrix_market import read_operators, write_operators

__all__ = [
    "condition_number",
    "generalized_symmetric_eig",
    "is_symmetric",
    "least_squares",
    "matrix_rank",
    "null_space",
    "read_operators",
    "solve_spd",
    "solve_symmetric_indefinite",
    "write_operators",
]
