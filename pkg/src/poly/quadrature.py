"""Grundmann-Moeller quadrature on the reference simplex in barycentric form"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np
from modepy import GrundmannMoellerSimplexQuadrature

from src.config.models import Settings, get_settings
from src.errors import UnsupportedDegree


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Barycentric points and weights normalized to sum 1"""

    degree_exact: int
    points: np.ndarray
    weights: np.ndarray

    @property
    def n_points(self) -> int:
        return int(self.weights.shape[0])

    def physical_points(self, vertices: np.ndarray) -> np.ndarray:
        """Cartesian points for a simplex with vertex rows ``vertices``"""
        return self.points @ vertices


@lru_cache(maxsize=None)
def _rule(d: int, degree: int) -> QuadratureRule:
    order = degree // 2
    rule = GrundmannMoellerSimplexQuadrature(order, d)
    # biunit simplex: lambda_j = (x_j + 1) / 2, lambda_0 = 1 - sum
    tail = (np.asarray(rule.nodes).reshape(d, -1).T + 1.0) / 2.0
    points = np.hstack([1.0 - tail.sum(axis=1, keepdims=True), tail])
    weights = np.asarray(rule.weights, dtype=float)
    weights = weights / weights.sum()
    return QuadratureRule(degree_exact=int(rule.exact_to), points=points, weights=weights)


def quadrature(d: int, degree: int, settings: Optional[Settings] = None) -> QuadratureRule:
    """
    Rule exact for polynomials of total degree ``degree`` on a d-simplex

    Args:
        d: Simplex dimension (>= 1)
        degree: Required polynomial exactness (>= 0)
        settings: Numerical settings (quadrature cap)

    Returns:
        QuadratureRule with weights summing to 1

    Raises:
        UnsupportedDegree: degree above the configured cap
    """
    settings = settings or get_settings()
    if d < 1 or degree < 0:
        raise UnsupportedDegree(f"invalid quadrature request d={d}, degree={degree}")
    if degree > settings.quadrature_cap:
        raise UnsupportedDegree(
            f"quadrature degree {degree} exceeds cap {settings.quadrature_cap}"
        )
    return _rule(d, degree)


@lru_cache(maxsize=None)
def gauss_edge_rule(n_points: int = 2) -> QuadratureRule:
    """Gauss-Legendre rule on an edge in barycentric form (exact to 2n-1)"""
    nodes, weights = np.polynomial.legendre.leggauss(n_points)
    t = (nodes + 1.0) / 2.0
    points = np.stack([1.0 - t, t], axis=1)
    return QuadratureRule(degree_exact=2 * n_points - 1, points=points, weights=weights / 2.0)
