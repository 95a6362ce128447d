"""
Local element definitions on one refined macro cell

Raw fields (macro polynomials, psi/theta fields, modified bubbles), their
degrees of freedom, nodal bases obtained by inverting the DOF matrix, and the
local rank and unisolvence checks.
"""

from dataclasses import dataclass
from itertools import combinations
from math import comb
from typing import Dict, List, Optional, Tuple

import numpy as np
import structlog

from src.config.models import Settings, get_settings
from src.elements.bubbles import (
    BubbleCache,
    build_psi,
    build_theta,
    face_bubble,
    face_flux,
    modify_bubble,
)
from src.errors import DimensionRule, SingularDofMatrix, UnsupportedKind
from src.linalg.dense import matrix_rank
from src.poly.bary import BaryPoly, exponent_array
from src.poly.lagrange import lagrange_basis, node_key
from src.poly.quadrature import gauss_edge_rule
from src.poly.split import (
    Continuity,
    LambdaSystem,
    SplitPiecewisePoly,
    divergence,
    evaluate_at_macro_points,
    restrict_macro_poly,
)

logger = structlog.get_logger()

LocalDof = Tuple
NODAL_KINDS = ("VR", "VDIV", "VH68", "MF", "BR")

# DOF matrices above this condition number are treated as singular
SINGULAR_CONDITION = 1e12


def unit(d: int, c: int) -> np.ndarray:
    e = np.zeros(d)
    e[c] = 1.0
    return e


def macro_lagrange_fields(ls: LambdaSystem, degree: int) -> List[SplitPiecewisePoly]:
    """Scalar macro Lagrange basis of the given degree, restricted to the split"""
    basis = lagrange_basis(ls.d + 1, degree)
    return [restrict_macro_poly(basis.component(j), ls) for j in range(basis.ncomp)]


def macro_vector_fields(ls: LambdaSystem, degree: int) -> List[SplitPiecewisePoly]:
    """Vector macro Lagrange fields, component-major within each node"""
    return [f.outer(unit(ls.d, c)) for f in macro_lagrange_fields(ls, degree) for c in range(ls.d)]


def _bubble(cache: Optional[BubbleCache], ls: LambdaSystem, i: int, settings: Settings):
    return cache.modified_bubble(ls.cell, i) if cache is not None else modify_bubble(ls, i, settings)


def _psi(cache: Optional[BubbleCache], ls: LambdaSystem, i: int, settings: Settings):
    return cache.psi(ls.cell, i) if cache is not None else build_psi(ls, i, settings)


def _theta(cache: Optional[BubbleCache], ls: LambdaSystem, i: int, settings: Settings):
    return cache.theta(ls.cell, i) if cache is not None else build_theta(ls, i, settings)


def uses_modified_bubbles(kind: str, d: int) -> bool:
    return kind in ("MF", "VDIV", "VH68") or (kind == "VR" and d >= 3)


def raw_fields(
    kind: str, ls: LambdaSystem, cache: Optional[BubbleCache] = None, settings: Optional[Settings] = None
) -> List[SplitPiecewisePoly]:
    """
    Spanning fields of a local velocity element

    VR: P2(K) + psi_i + beta_i (beta_i dropped for d = 2); VDIV: theta_i + beta_i;
    VH68: P1(K) + theta_i + beta_i; MF: beta_i; BR: b_i.
    """
    settings = settings or get_settings()
    n = ls.d + 1
    if kind == "BR":
        return [
            (cache.face_bubble(ls.cell, i) if cache is not None else face_bubble(ls, i)).field for i in range(n)
        ]
    fields: List[SplitPiecewisePoly] = []
    if kind == "VR":
        fields += macro_vector_fields(ls, 2)
        fields += [_psi(cache, ls, i, settings).field for i in range(n)]
    elif kind == "VH68":
        fields += macro_vector_fields(ls, 1)
        fields += [_theta(cache, ls, i, settings).field for i in range(n)]
    elif kind == "VDIV":
        fields += [_theta(cache, ls, i, settings).field for i in range(n)]
    elif kind != "MF":
        raise UnsupportedKind(f"no local element of kind {kind}")
    if uses_modified_bubbles(kind, ls.d):
        fields += [_bubble(cache, ls, i, settings).field for i in range(n)]
    return fields


def local_dofs(kind: str, d: int) -> List[LocalDof]:
    """
    Degrees of freedom in local macro indices

    ("v", j, c) value at vertex j, ("dv", j) divergence at vertex j,
    ("e", (a, b), c) edge integral, ("f", j) outward flux through F_j.
    """
    n = d + 1
    values = [("v", j, c) for j in range(n) for c in range(d)]
    div_values = [("dv", j) for j in range(n)]
    edges = [("e", edge, c) for edge in combinations(range(n), 2) for c in range(d)]
    fluxes = [("f", j) for j in range(n)]
    if kind == "VR":
        if d < 2:
            raise DimensionRule("VR needs d >= 2")
        return values + div_values + edges + (fluxes if d >= 3 else [])
    if kind == "VDIV":
        return div_values + fluxes
    if kind == "VH68":
        return values + div_values + fluxes
    if kind in ("MF", "BR"):
        return fluxes
    raise UnsupportedKind(f"no local element of kind {kind}")


def vr_local_dimension(d: int) -> int:
    """(d+1)(d^2+2d+4)/2 for d >= 3; the triangle variant without flux bubbles has P2 + d + 1"""
    if d == 2:
        return div_conforming_p2_dimension(2)
    return (d + 1) * (d * d + 2 * d + 4) // 2


def div_conforming_p2_dimension(d: int) -> int:
    """dim P2(K) vector + d + 1"""
    return d * comb(d + 2, 2) + d + 1


class DofEvaluator:
    """Evaluates local DOF functionals on fields of one cell"""

    def __init__(self, ls: LambdaSystem, settings: Optional[Settings] = None):
        self.ls = ls
        self.settings = settings or get_settings()
        self._edge_rule = gauss_edge_rule(2)

    def _vertex(self, j: int) -> np.ndarray:
        return np.eye(self.ls.d + 1)[j]

    def __call__(self, dof: LocalDof, field: SplitPiecewisePoly, div: Optional[SplitPiecewisePoly] = None) -> float:
        ls = self.ls
        tag = dof[0]
        if tag == "v":
            return float(evaluate_at_macro_points(field, ls, self._vertex(dof[1]))[0, dof[2]])
        if tag == "dv":
            div = div if div is not None else divergence(field, ls)
            return float(evaluate_at_macro_points(div, ls, self._vertex(dof[1]))[0, 0])
        if tag == "e":
            a, b = dof[1]
            mu = np.zeros((self._edge_rule.n_points, ls.d + 1))
            mu[:, a] = self._edge_rule.points[:, 0]
            mu[:, b] = self._edge_rule.points[:, 1]
            length = float(np.linalg.norm(ls.macro_vertices[a] - ls.macro_vertices[b]))
            values = evaluate_at_macro_points(field, ls, mu)[:, dof[2]]
            return length * float(self._edge_rule.weights.dot(values))
        if tag == "f":
            return face_flux(field, ls, dof[1], self.settings)
        raise UnsupportedKind(f"unknown DOF tag {tag}")


def dof_matrix(dofs: List[LocalDof], fields: List[SplitPiecewisePoly], ls: LambdaSystem) -> np.ndarray:
    """D[a, b] = dof_a(field_b)"""
    evaluate = DofEvaluator(ls)
    needs_div = any(dof[0] == "dv" for dof in dofs)
    matrix = np.zeros((len(dofs), len(fields)))
    for b, field in enumerate(fields):
        field = field.to_float()
        div = divergence(field, ls) if needs_div else None
        for a, dof in enumerate(dofs):
            matrix[a, b] = evaluate(dof, field, div)
    return matrix


def combine(fields: List[SplitPiecewisePoly], weights: np.ndarray) -> List[SplitPiecewisePoly]:
    """Fields sum_c fields[c] * weights[c, b] for every column b"""
    degree = max(f.degree for f in fields)
    n_children = len(fields[0].pieces)
    n_vars = fields[0].n_vars
    out_pieces: List[List[BaryPoly]] = [[] for _ in range(weights.shape[1])]
    for i in range(n_children):
        stacked = np.stack([f.pieces[i].to_float().elevate(degree).coeffs for f in fields], axis=2)
        mixed = np.einsum("Ncf,fb->Nbc", stacked, weights)
        for b in range(weights.shape[1]):
            out_pieces[b].append(BaryPoly(n_vars, degree, mixed[:, b, :].copy()))
    cell = fields[0].macro_cell
    return [SplitPiecewisePoly(cell, pieces, Continuity.C0) for pieces in out_pieces]


@dataclass
class UnisolvenceReport:
    kind: str
    d: int
    size: int
    condition: float
    min_singular: float

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "d": self.d,
            "size": self.size,
            "condition": self.condition,
            "min_singular": self.min_singular,
        }


def _equilibrated(matrix: np.ndarray) -> np.ndarray:
    rows = np.max(np.abs(matrix), axis=1, keepdims=True)
    rows[rows == 0.0] = 1.0
    scaled = matrix / rows
    cols = np.max(np.abs(scaled), axis=0, keepdims=True)
    cols[cols == 0.0] = 1.0
    return scaled / cols


def unisolvence_report(kind: str, matrix: np.ndarray, d: int) -> UnisolvenceReport:
    if matrix.shape[0] != matrix.shape[1]:
        raise SingularDofMatrix(f"{kind}: {matrix.shape[0]} DOFs for {matrix.shape[1]} fields")
    singular = np.linalg.svd(_equilibrated(matrix), compute_uv=False)
    condition = float(singular[0] / singular[-1]) if singular[-1] > 0.0 else float("inf")
    return UnisolvenceReport(kind, d, matrix.shape[0], condition, float(singular[-1]))


@dataclass
class LocalElement:
    kind: str
    dofs: List[LocalDof]
    fields: List[SplitPiecewisePoly]
    matrix: np.ndarray
    basis: List[SplitPiecewisePoly]
    report: UnisolvenceReport


def build_local_element(
    kind: str, ls: LambdaSystem, cache: Optional[BubbleCache] = None, settings: Optional[Settings] = None
) -> LocalElement:
    """
    Nodal basis of a local element: basis_b = sum_c raw_c (D^-1)[c, b]

    Raises:
        SingularDofMatrix: DOF matrix is not square or not invertible
    """
    settings = settings or get_settings()
    dofs = local_dofs(kind, ls.d)
    fields = raw_fields(kind, ls, cache, settings)
    matrix = dof_matrix(dofs, fields, ls)
    report = unisolvence_report(kind, matrix, ls.d)
    if report.condition > SINGULAR_CONDITION:
        logger.error("dof_matrix_singular", kind=kind, cell=ls.cell, condition=report.condition)
        raise SingularDofMatrix(f"{kind} on cell {ls.cell}: condition {report.condition:.3e}")
    basis = combine(fields, np.linalg.inv(matrix))
    return LocalElement(kind, dofs, fields, matrix, basis, report)


def check_unisolvence(kind: str, ls: LambdaSystem, settings: Optional[Settings] = None) -> UnisolvenceReport:
    """Condition number of the equilibrated local DOF matrix"""
    return build_local_element(kind, ls, None, settings).report


# P2(K^r) with continuous divergence


@dataclass
class SplitP2Basis:
    """Continuous vector P2 Lagrange basis on one split, all nodes included"""

    keys: List[Tuple]
    points: Dict[Tuple, Tuple[int, np.ndarray]]
    fields: List[SplitPiecewisePoly]
    constraints: np.ndarray


def split_p2_basis(ls: LambdaSystem) -> SplitP2Basis:
    """
    Vector P2 Lagrange basis on the split and the rows enforcing a continuous divergence

    Child vertex labels are extended indices (0 = split point), so node keys
    agree between children. The constraint rows equate the divergence from
    both sides at the vertices of every interior interface.
    """
    n = ls.d + 1
    d = ls.d
    scalar = lagrange_basis(n, 2)
    lattice = exponent_array(n, 2)
    node_index: Dict[Tuple, int] = {}
    points: Dict[Tuple, Tuple[int, np.ndarray]] = {}
    per_child: List[List[Tuple[int, int]]] = []
    for i in range(n):
        labels = ls.child_ext_ids(i)
        entries = []
        for j, beta in enumerate(lattice):
            key = node_key(labels, beta)
            if key not in node_index:
                node_index[key] = len(node_index)
                points[key] = (i, beta / 2.0)
            entries.append((j, node_index[key]))
        per_child.append(entries)

    keys = [key for key, _ in sorted(node_index.items(), key=lambda item: item[1])]
    n_cols = len(keys) * d
    pieces: List[List[BaryPoly]] = [
        [BaryPoly.zeros(n, 2, d) for _ in range(n)] for _ in range(n_cols)
    ]
    # div_at[i][ext] is the row of div values at child vertex ext seen from child i
    div_at = np.zeros((n, n + 1, n_cols))
    for i in range(n):
        labels = ls.child_ext_ids(i)
        for j, node in per_child[i]:
            for c in range(d):
                column = node * d + c
                piece = scalar.component(j).outer(unit(d, c))
                pieces[column][i] = piece
                div_values = piece.divergence(ls.child_grads[i]).evaluate(np.eye(n))[:, 0]
                for local, ext in enumerate(labels):
                    div_at[i, ext, column] = div_values[local]

    rows = []
    for i, j in combinations(range(n), 2):
        for ext in [0] + [m + 1 for m in range(n) if m not in (i, j)]:
            rows.append(div_at[i, ext] - div_at[j, ext])
    fields = [SplitPiecewisePoly(ls.cell, p, Continuity.C0) for p in pieces]
    return SplitP2Basis(keys, points, fields, np.array(rows))


def nodal_values(basis: SplitP2Basis, field: SplitPiecewisePoly) -> np.ndarray:
    """Coefficients of a continuous P2 field in the split Lagrange basis"""
    out = np.zeros(len(basis.keys) * field.ncomp)
    for node, key in enumerate(basis.keys):
        child, point = basis.points[key]
        out[node * field.ncomp : (node + 1) * field.ncomp] = field.to_float().evaluate(child, point.reshape(1, -1))[0]
    return out


@dataclass
class DivConformingReport:
    d: int
    dimension: int
    expected: int
    span_rank: int
    span_residual: float

    def to_dict(self) -> dict:
        return {
            "d": self.d,
            "dimension": self.dimension,
            "expected": self.expected,
            "span_rank": self.span_rank,
            "span_residual": self.span_residual,
        }


def div_conforming_p2_report(ls: LambdaSystem, settings: Optional[Settings] = None) -> DivConformingReport:
    """
    Rank of P2(K^r) with continuous divergence, and the span of P2(K) plus psi_i

    The span fields are expressed by their nodal values; ``span_residual``
    measures how far they are from satisfying the divergence constraints.
    """
    settings = settings or get_settings()
    basis = split_p2_basis(ls)
    constraint_rank = matrix_rank(basis.constraints)
    dimension = basis.constraints.shape[1] - constraint_rank
    span = macro_vector_fields(ls, 2) + [build_psi(ls, i, settings).field for i in range(ls.d + 1)]
    values = np.array([nodal_values(basis, f) for f in span]).T
    residual = float(np.max(np.abs(basis.constraints @ values))) if values.size else 0.0
    return DivConformingReport(
        d=ls.d,
        dimension=dimension,
        expected=div_conforming_p2_dimension(ls.d),
        span_rank=matrix_rank(values),
        span_residual=residual,
    )
