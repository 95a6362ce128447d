"""Dense solves, minimal-norm least squares and generalized symmetric eigenproblems"""

import time
from fractions import Fraction
from typing import Optional

import numpy as np
import scipy.linalg
import structlog
import sympy

from src.errors import MassNotSPD, NotSPD, SingularToTolerance
from src.monitoring.metrics import eigen_solve_latency

logger = structlog.get_logger()

RANK_TOL = 1e-12
RESIDUAL_TOL = 1e-10


def is_symmetric(matrix: np.ndarray, tol: float = 1e-12) -> bool:
    matrix = np.asarray(matrix, dtype=float)
    scale = max(1.0, float(np.max(np.abs(matrix)))) if matrix.size else 1.0
    return bool(np.max(np.abs(matrix - matrix.T), initial=0.0) <= tol * scale)


def _check_residual(matrix: np.ndarray, x: np.ndarray, rhs: np.ndarray) -> float:
    residual = float(np.linalg.norm(matrix @ x - rhs))
    bound = RESIDUAL_TOL * (np.linalg.norm(matrix) * np.linalg.norm(x) + np.linalg.norm(rhs))
    if residual > bound and residual > 0.0:
        logger.error("solve_residual_too_large", residual=residual, bound=float(bound))
        raise SingularToTolerance(f"residual {residual:.3e} exceeds {bound:.3e}")
    return residual


def solve_spd(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """
    Cholesky solve of a symmetric positive definite system

    Raises:
        NotSPD: Factorization fails
    """
    try:
        factor = scipy.linalg.cho_factor(matrix)
    except np.linalg.LinAlgError as e:
        raise NotSPD(str(e)) from e
    x = scipy.linalg.cho_solve(factor, rhs)
    _check_residual(np.asarray(matrix), x, np.asarray(rhs))
    return x


def solve_symmetric_indefinite(matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """
    Symmetric indefinite (LDL^T class) solve for saddle point systems

    Raises:
        SingularToTolerance: Factorization breaks down or the residual is too large
    """
    try:
        x = scipy.linalg.solve(matrix, rhs, assume_a="sym")
    except (np.linalg.LinAlgError, ValueError) as e:
        raise SingularToTolerance(str(e)) from e
    _check_residual(np.asarray(matrix), x, np.asarray(rhs))
    return x


def _to_sympy(array: np.ndarray) -> sympy.Matrix:
    array = np.atleast_2d(array) if np.ndim(array) else np.array([[array]])

    def convert(x):
        value = x if isinstance(x, Fraction) else Fraction(x)
        return sympy.Rational(value.numerator, value.denominator)

    return sympy.Matrix([[convert(x) for x in row] for row in array])


def _from_sympy(matrix: sympy.Matrix) -> np.ndarray:
    out = np.empty((matrix.rows, matrix.cols), dtype=object)
    for r in range(matrix.rows):
        for c in range(matrix.cols):
            num, den = sympy.fraction(sympy.nsimplify(matrix[r, c]))
            out[r, c] = Fraction(int(num), int(den))
    return out


def least_squares(matrix: np.ndarray, rhs: np.ndarray, rcond: float = RANK_TOL) -> np.ndarray:
    """
    Minimal-Euclidean-norm least-squares solution

    Object arrays of Fractions are solved exactly through the pseudo-inverse.

    Args:
        matrix: System matrix (m, n)
        rhs: Right-hand side (m,) or (m, r)
        rcond: Relative singular value cutoff

    Returns:
        Solution (n,) or (n, r)
    """
    matrix = np.asarray(matrix)
    rhs = np.asarray(rhs)
    if matrix.dtype == object or rhs.dtype == object:
        column = rhs.ndim == 1
        solution = _to_sympy(matrix).pinv() * _to_sympy(rhs.reshape(rhs.shape[0], -1))
        out = _from_sympy(solution)
        return out[:, 0] if column else out
    if matrix.size == 0:
        return np.zeros((matrix.shape[1],) + rhs.shape[1:])
    x, _, _, _ = scipy.linalg.lstsq(matrix, rhs, cond=rcond)
    return x


def matrix_rank(matrix: np.ndarray, tol: float = RANK_TOL) -> int:
    """Numerical rank with threshold ``tol`` relative to the largest singular value"""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.size == 0:
        return 0
    singular = scipy.linalg.svdvals(matrix)
    if singular[0] == 0.0:
        return 0
    return int(np.sum(singular > tol * singular[0]))


def condition_number(matrix: np.ndarray) -> float:
    singular = scipy.linalg.svdvals(np.asarray(matrix, dtype=float))
    if singular[-1] == 0.0:
        return float("inf")
    return float(singular[0] / singular[-1])


def null_space(matrix: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    return scipy.linalg.null_space(np.asarray(matrix, dtype=float), rcond=tol)


def generalized_symmetric_eig(
    stiff: np.ndarray, mass: np.ndarray, problem: Optional[str] = None
) -> np.ndarray:
    """
    Eigenvalues of S x = lambda M x in ascending order

    Args:
        stiff: Symmetric matrix S
        mass: Symmetric positive definite matrix M
        problem: Label for the latency histogram

    Returns:
        Real eigenvalues, ascending

    Raises:
        MassNotSPD: M is not positive definite
    """
    start = time.perf_counter()
    try:
        scipy.linalg.cholesky(mass)
    except np.linalg.LinAlgError as e:
        raise MassNotSPD(str(e)) from e
    values = scipy.linalg.eigh(stiff, mass, eigvals_only=True)
    eigen_solve_latency.labels(problem=problem or "generic").observe(time.perf_counter() - start)
    return np.sort(values)
