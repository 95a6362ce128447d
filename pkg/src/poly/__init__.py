"""Barycentric polynomial algebra on simplices and on their barycentric splits"""

from .bary import BaryPoly, exponent_index, exponents, monomial_derivative_values, monomial_values
from .lagrange import NodeKey, lagrange_basis, lattice_nodes, node_key
from .quadrature import QuadratureRule, gauss_edge_rule, quadrature
from .split import (
    Continuity,
    LambdaSystem,
    SplitPiecewisePoly,
    boundary_trace,
    continuity_residual,
    divergence,
    evaluate_at_macro_points,
    gradient,
    h1_norm,
    h1_seminorm,
    integrate,
    l2_inner,
    l2_norm,
    lambda_system,
    restrict_macro_poly,
)

__all__ = [
    "BaryPoly",
    "Continuity",
    "LambdaSystem",
    "NodeKey",
    "QuadratureRule",
    "SplitPiecewisePoly",
    "boundary_trace",
    "continuity_residual",
    "divergence",
    "evaluate_at_macro_points",
    "exponent_index",
    "exponents",
    "gauss_edge_rule",
    "gradient",
    "h1_norm",
    "h1_seminorm",
    "integrate",
    "l2_inner",
    "l2_norm",
    "lagrange_basis",
    "lambda_system",
    "lattice_nodes",
    "monomial_derivative_values",
    "monomial_values",
    "node_key",
    "quadrature",
    "restrict_macro_poly",
]
