"""Equispaced Lagrange bases on a simplex"""

from functools import lru_cache
from typing import Sequence, Tuple

import numpy as np

from src.poly.bary import BaryPoly, exponent_array, monomial_values

NodeKey = Tuple[Tuple[int, int], ...]


@lru_cache(maxsize=None)
def lattice_nodes(n_vars: int, degree: int) -> np.ndarray:
    """Barycentric lattice points beta/degree (the barycenter for degree 0)"""
    if degree == 0:
        return np.full((1, n_vars), 1.0 / n_vars)
    return exponent_array(n_vars, degree) / degree


@lru_cache(maxsize=None)
def lagrange_coefficients(n_vars: int, degree: int) -> np.ndarray:
    """Monomial coefficients of the nodal basis; column i is dual to lattice node i"""
    vandermonde = monomial_values(n_vars, degree, lattice_nodes(n_vars, degree))
    return np.linalg.inv(vandermonde)


def lagrange_basis(n_vars: int, degree: int) -> BaryPoly:
    """All nodal basis functions as the components of one polynomial"""
    return BaryPoly(n_vars, degree, lagrange_coefficients(n_vars, degree).copy())


def node_key(vertex_ids: Sequence[int], beta: Sequence[int]) -> NodeKey:
    """Canonical key of a lattice node shared by every simplex containing it"""
    return tuple(sorted((int(v), int(b)) for v, b in zip(vertex_ids, beta) if b > 0))
