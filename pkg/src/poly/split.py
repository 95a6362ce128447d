"""Piecewise polynomials on the (d+1)-child split of one macro simplex"""

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from itertools import combinations
from math import factorial
from typing import List, Optional, Sequence

import numpy as np
import structlog
import sympy

from src.config.models import Settings, get_settings
from src.errors import CellMismatch, DegenerateChild, SimplexMismatch
from src.mesh.simplex_mesh import (
    RefinedMesh,
    barycentric_coordinates,
    barycentric_gradients,
    face_geometry,
)
from src.poly.bary import BaryPoly, exponent_array, to_exact

logger = structlog.get_logger()


class Continuity(str, Enum):
    """Regularity class of a piecewise polynomial across the split"""

    L2 = "L2"
    C0 = "C0"


def _join(a: Continuity, b: Continuity) -> Continuity:
    return Continuity.C0 if a == Continuity.C0 and b == Continuity.C0 else Continuity.L2


@dataclass(eq=False)
class SplitPiecewisePoly:
    """One BaryPoly per child; child i is written in [lambda_0] + [lambda_j, j != i]"""

    macro_cell: int
    pieces: List[BaryPoly]
    continuity: Continuity = Continuity.L2

    __array_ufunc__ = None

    @property
    def degree(self) -> int:
        return max(p.degree for p in self.pieces)

    @property
    def ncomp(self) -> int:
        return self.pieces[0].ncomp

    @property
    def exact(self) -> bool:
        return self.pieces[0].exact

    @property
    def n_vars(self) -> int:
        return self.pieces[0].n_vars

    @classmethod
    def zeros(
        cls, macro_cell: int, d: int, degree: int, ncomp: int = 1, exact: bool = False
    ) -> "SplitPiecewisePoly":
        pieces = [BaryPoly.zeros(d + 1, degree, ncomp, exact) for _ in range(d + 1)]
        return cls(macro_cell, pieces, Continuity.C0)

    def _check(self, other: "SplitPiecewisePoly") -> None:
        if other.macro_cell != self.macro_cell:
            raise CellMismatch(f"macro cell {self.macro_cell} vs {other.macro_cell}")
        if len(other.pieces) != len(self.pieces):
            raise SimplexMismatch("different numbers of children")

    def __add__(self, other: "SplitPiecewisePoly") -> "SplitPiecewisePoly":
        self._check(other)
        pieces = [a + b for a, b in zip(self.pieces, other.pieces)]
        return SplitPiecewisePoly(self.macro_cell, pieces, _join(self.continuity, other.continuity))

    def __sub__(self, other: "SplitPiecewisePoly") -> "SplitPiecewisePoly":
        return self + (-other)

    def __neg__(self) -> "SplitPiecewisePoly":
        return SplitPiecewisePoly(self.macro_cell, [-p for p in self.pieces], self.continuity)

    def __mul__(self, other) -> "SplitPiecewisePoly":
        if isinstance(other, SplitPiecewisePoly):
            self._check(other)
            pieces = [a.mul(b) for a, b in zip(self.pieces, other.pieces)]
            return SplitPiecewisePoly(self.macro_cell, pieces, _join(self.continuity, other.continuity))
        return SplitPiecewisePoly(self.macro_cell, [p * other for p in self.pieces], self.continuity)

    __rmul__ = __mul__

    def __pow__(self, power: int) -> "SplitPiecewisePoly":
        return SplitPiecewisePoly(self.macro_cell, [p**power for p in self.pieces], self.continuity)

    def elevate(self, degree: int) -> "SplitPiecewisePoly":
        return SplitPiecewisePoly(self.macro_cell, [p.elevate(degree) for p in self.pieces], self.continuity)

    def outer(self, vector) -> "SplitPiecewisePoly":
        return SplitPiecewisePoly(self.macro_cell, [p.outer(vector) for p in self.pieces], self.continuity)

    def dot(self, vector) -> "SplitPiecewisePoly":
        return SplitPiecewisePoly(self.macro_cell, [p.dot(vector) for p in self.pieces], self.continuity)

    def component(self, c: int) -> "SplitPiecewisePoly":
        return SplitPiecewisePoly(self.macro_cell, [p.component(c) for p in self.pieces], self.continuity)

    @staticmethod
    def stack(parts: Sequence["SplitPiecewisePoly"]) -> "SplitPiecewisePoly":
        pieces = [BaryPoly.stack([part.pieces[i] for part in parts]) for i in range(len(parts[0].pieces))]
        continuity = Continuity.C0
        for part in parts:
            continuity = _join(continuity, part.continuity)
        return SplitPiecewisePoly(parts[0].macro_cell, pieces, continuity)

    def to_float(self) -> "SplitPiecewisePoly":
        return SplitPiecewisePoly(self.macro_cell, [p.to_float() for p in self.pieces], self.continuity)

    def to_exact(self) -> "SplitPiecewisePoly":
        return SplitPiecewisePoly(self.macro_cell, [p.to_exact() for p in self.pieces], self.continuity)

    def max_abs(self) -> float:
        return max(p.max_abs() for p in self.pieces)

    def evaluate(self, child: int, points: np.ndarray) -> np.ndarray:
        """Values on one child at child-local barycentric points"""
        return self.pieces[child].evaluate(points)


def _exact_inverse(matrix: np.ndarray) -> np.ndarray:
    rows = [[sympy.Rational(x.numerator, x.denominator) for x in row] for row in matrix]
    inverse = sympy.Matrix(rows).inv()
    return np.array(
        [[Fraction(int(sympy.fraction(e)[0]), int(sympy.fraction(e)[1])) for e in inverse.row(r)] for r in range(inverse.rows)],
        dtype=object,
    )


def _exact_barycentric_gradients(points: np.ndarray) -> np.ndarray:
    n = points.shape[0]
    system = np.empty((n, n), dtype=object)
    system[0, :] = Fraction(1)
    system[1:, :] = points.T
    return _exact_inverse(system)[:, 1:]


def _exact_volume(points: np.ndarray) -> Fraction:
    d = points.shape[1]
    edges = [[sympy.Rational(x.numerator, x.denominator) for x in row - points[0]] for row in points[1:]]
    det = sympy.Matrix(edges).det()
    num, den = sympy.fraction(det)
    return abs(Fraction(int(num), int(den))) / factorial(d)


@dataclass(frozen=True, eq=False)
class LambdaSystem:
    """
    Piecewise-linear functions lambda_0..lambda_{d+1} and macro coordinates mu on one refined cell

    Extended index 0 is the split point x_0, extended index j+1 macro vertex j.
    """

    cell: int
    d: int
    exact: bool
    macro_vertices: np.ndarray
    split_point: np.ndarray
    child_vertices: np.ndarray
    child_grads: np.ndarray
    ext_grads: np.ndarray
    macro_grads: np.ndarray
    mu_split: np.ndarray
    normals: np.ndarray
    heights: np.ndarray
    face_measures: np.ndarray
    child_volumes: np.ndarray
    volume: object

    def local_index(self, child: int, ext: int) -> Optional[int]:
        """Child-local coordinate index of an extended index (None if it vanishes there)"""
        if ext == 0:
            return 0
        j = ext - 1
        if j == child:
            return None
        return j + 1 if j < child else j

    def child_ext_ids(self, child: int) -> List[int]:
        """Extended indices of the child-local coordinates in order"""
        return [0] + [j + 1 for j in range(self.d + 1) if j != child]

    def grad_lambda0(self, child: int) -> np.ndarray:
        return self.ext_grads[child, 0]

    def lam(self, ext: int) -> SplitPiecewisePoly:
        """lambda_ext as a continuous piecewise-linear function"""
        n = self.d + 1
        pieces = []
        for i in range(n):
            local = self.local_index(i, ext)
            if local is None:
                pieces.append(BaryPoly.zeros(n, 1, 1, self.exact))
            else:
                pieces.append(BaryPoly.coordinate(n, local, self.exact))
        return SplitPiecewisePoly(self.cell, pieces, Continuity.C0)

    def restriction_forms(self, child: int) -> np.ndarray:
        """Rows express mu_j in child-local coordinates: mu_j = lambda_{j+1} + mu_j(x_0) lambda_0"""
        n = self.d + 1
        forms = np.empty((n, n), dtype=object) if self.exact else np.zeros((n, n))
        if self.exact:
            forms.fill(Fraction(0))
        for j in range(n):
            forms[j, 0] = self.mu_split[j]
            local = self.local_index(child, j + 1)
            if local is not None:
                forms[j, local] = forms[j, local] + 1
        return forms

    def mu(self, j: int) -> SplitPiecewisePoly:
        """Macro barycentric coordinate mu_j restricted to the split"""
        return restrict_macro_poly(BaryPoly.coordinate(self.d + 1, j, self.exact), self)

    def macro_to_child(self, mu: np.ndarray) -> tuple:
        """Child containing the macro-barycentric point ``mu`` and its child-local coordinates"""
        mu = np.asarray(mu, dtype=float)
        mu_split = self.mu_split.astype(float)
        ratios = mu / mu_split
        child = int(np.argmin(ratios))
        lam0 = ratios[child]
        local = np.empty(self.d + 1)
        local[0] = lam0
        for j in range(self.d + 1):
            index = self.local_index(child, j + 1)
            if index is not None:
                local[index] = mu[j] - mu_split[j] * lam0
        return child, np.clip(local, 0.0, None)


def lambda_system(
    refined: RefinedMesh, cell: int, exact: Optional[bool] = None, settings: Optional[Settings] = None
) -> LambdaSystem:
    """
    Build lambda_0..lambda_{d+1}, their per-child gradients and the macro coordinates

    Args:
        refined: Refined mesh
        cell: Macro cell id
        exact: Exact rational geometry (defaults to ALFELD_RATIONAL)
        settings: Numerical settings

    Returns:
        LambdaSystem with grad(lambda_0) on child i equal to -n_i/h_i

    Raises:
        DegenerateChild: A child has vanishing volume
    """
    settings = settings or get_settings()
    exact = settings.rational if exact is None else exact
    d = refined.dim
    n = d + 1
    macro_vertices = refined.macro.cell_points(cell)
    split_point = refined.split_points[cell]
    child_vertices = np.array([refined.child_points(cell, i) for i in range(n)])

    if exact:
        vertices_q = to_exact(macro_vertices)
        split_q = to_exact(split_point)
        if np.allclose(split_point, macro_vertices.mean(axis=0)):
            split_q = np.array([sum(vertices_q[:, c]) / n for c in range(d)], dtype=object)
        child_q = [np.vstack([split_q.reshape(1, -1)] + [vertices_q[j : j + 1] for j in range(n) if j != i]) for i in range(n)]
        child_grads = np.array([_exact_barycentric_gradients(pts) for pts in child_q], dtype=object)
        macro_grads = _exact_barycentric_gradients(vertices_q)
        mu_split = _exact_barycentric_coordinates(vertices_q, split_q)
        child_volumes = np.array([_exact_volume(pts) for pts in child_q], dtype=object)
        volume = _exact_volume(vertices_q)
    else:
        child_grads = np.array([barycentric_gradients(pts) for pts in child_vertices])
        macro_grads = barycentric_gradients(macro_vertices)
        mu_split = barycentric_coordinates(macro_vertices, split_point)
        child_volumes = refined.child_volumes(cell)
        volume = refined.macro.volume(cell)

    if float(min(child_volumes)) <= 1e-14 * float(volume):
        raise DegenerateChild(f"cell {cell} has a degenerate child")

    ext_grads = np.empty((n, n + 1, d), dtype=object) if exact else np.zeros((n, n + 1, d))
    if exact:
        ext_grads.fill(Fraction(0))
    for i in range(n):
        ext_grads[i, 0] = child_grads[i, 0]
        for j in range(n):
            if j == i:
                continue
            local = j + 1 if j < i else j
            ext_grads[i, j + 1] = child_grads[i, local]

    geometry = [face_geometry(refined, cell, i) for i in range(n)]
    return LambdaSystem(
        cell=cell,
        d=d,
        exact=exact,
        macro_vertices=macro_vertices,
        split_point=split_point,
        child_vertices=child_vertices,
        child_grads=child_grads,
        ext_grads=ext_grads,
        macro_grads=macro_grads,
        mu_split=mu_split,
        normals=np.array([g.normal for g in geometry]),
        heights=np.array([g.height for g in geometry]),
        face_measures=np.array([g.measure for g in geometry]),
        child_volumes=child_volumes,
        volume=volume,
    )


def _exact_barycentric_coordinates(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    n = points.shape[0]
    system = np.empty((n, n), dtype=object)
    system[0, :] = Fraction(1)
    system[1:, :] = points.T
    rhs = np.array([Fraction(1)] + list(x), dtype=object)
    return _exact_inverse(system).dot(rhs)


def restrict_macro_poly(p: BaryPoly, ls: LambdaSystem) -> SplitPiecewisePoly:
    """
    Re-expand a polynomial in macro coordinates mu on every child

    Args:
        p: Polynomial in the d+1 macro barycentric coordinates
        ls: Lambda system of the cell

    Returns:
        Continuous SplitPiecewisePoly of the same degree
    """
    if p.n_vars != ls.d + 1:
        raise SimplexMismatch(f"expected {ls.d + 1} macro coordinates, got {p.n_vars}")
    pieces = [p.compose(ls.restriction_forms(i)) for i in range(ls.d + 1)]
    return SplitPiecewisePoly(ls.cell, pieces, Continuity.C0)


def gradient(p: SplitPiecewisePoly, ls: LambdaSystem) -> SplitPiecewisePoly:
    """Piecewise Cartesian gradient (component-major for vector fields)"""
    pieces = [piece.gradient(ls.child_grads[i]) for i, piece in enumerate(p.pieces)]
    return SplitPiecewisePoly(p.macro_cell, pieces, Continuity.L2)


def divergence(v: SplitPiecewisePoly, ls: LambdaSystem) -> SplitPiecewisePoly:
    """Piecewise divergence of a d-component field"""
    pieces = [piece.divergence(ls.child_grads[i]) for i, piece in enumerate(v.pieces)]
    return SplitPiecewisePoly(v.macro_cell, pieces, Continuity.L2)


def integrate(p: SplitPiecewisePoly, ls: LambdaSystem) -> np.ndarray:
    """Integral over the macro cell, per component"""
    total = None
    for i, piece in enumerate(p.pieces):
        part = piece.integrate(ls.child_volumes[i])
        total = part if total is None else total + part
    return total


def l2_inner(p: SplitPiecewisePoly, q: SplitPiecewisePoly, ls: LambdaSystem):
    """Exact L2 inner product over the macro cell (summed over components)"""
    if p.macro_cell != q.macro_cell or p.macro_cell != ls.cell:
        raise CellMismatch(f"cells {p.macro_cell}, {q.macro_cell} and {ls.cell} differ")
    total = 0
    for i, (a, b) in enumerate(zip(p.pieces, q.pieces)):
        total = total + sum(a.mul(b).integrate(ls.child_volumes[i]))
    return total


def l2_norm(p: SplitPiecewisePoly, ls: LambdaSystem) -> float:
    return float(np.sqrt(max(float(l2_inner(p, p, ls)), 0.0)))


def h1_seminorm(p: SplitPiecewisePoly, ls: LambdaSystem) -> float:
    g = gradient(p, ls)
    return l2_norm(g, ls)


def h1_norm(p: SplitPiecewisePoly, ls: LambdaSystem) -> float:
    return float(np.hypot(l2_norm(p, ls), h1_seminorm(p, ls)))


def _face_lattice(n_face_vertices: int, degree: int) -> np.ndarray:
    return exponent_array(n_face_vertices, degree) / degree


def continuity_residual(p: SplitPiecewisePoly, ls: LambdaSystem, degree: Optional[int] = None) -> float:
    """
    Largest jump of ``p`` across the interior interfaces of the split

    Every interface is sampled on the lattice of order ``degree`` (default
    polynomial degree + 1).
    """
    n = ls.d + 1
    order = degree or p.degree + 1
    worst = 0.0
    for i, j in combinations(range(n), 2):
        face_ext = [0] + [m + 1 for m in range(n) if m not in (i, j)]
        weights = _face_lattice(len(face_ext), order)
        local_i = np.zeros((weights.shape[0], n))
        local_j = np.zeros((weights.shape[0], n))
        for column, ext in enumerate(face_ext):
            local_i[:, ls.local_index(i, ext)] = weights[:, column]
            local_j[:, ls.local_index(j, ext)] = weights[:, column]
        jump = p.evaluate(i, local_i) - p.evaluate(j, local_j)
        worst = max(worst, float(np.max(np.abs(jump))) if jump.size else 0.0)
    return worst


def boundary_points(ls: LambdaSystem, face: int, mu_face: np.ndarray) -> np.ndarray:
    """Child-local coordinates (in child ``face``) of points on macro facet F_face"""
    n = ls.d + 1
    local = np.zeros((mu_face.shape[0], n))
    others = [m for m in range(n) if m != face]
    for column, m in enumerate(others):
        local[:, ls.local_index(face, m + 1)] = mu_face[:, column]
    return local


def boundary_trace(
    p: SplitPiecewisePoly,
    ls: LambdaSystem,
    rng: Optional[np.random.Generator] = None,
    n_points: int = 200,
) -> float:
    """Largest |p| on the macro boundary, at random points or on a face lattice"""
    n = ls.d + 1
    worst = 0.0
    for face in range(n):
        if rng is not None:
            count = n_points // n + (1 if face < n_points % n else 0)
            mu_face = rng.dirichlet(np.ones(n - 1), size=count)
        else:
            mu_face = _face_lattice(n - 1, p.degree + 2)
        if mu_face.shape[0] == 0:
            continue
        values = p.evaluate(face, boundary_points(ls, face, mu_face))
        worst = max(worst, float(np.max(np.abs(values))))
    return worst


def evaluate_at_macro_points(p: SplitPiecewisePoly, ls: LambdaSystem, mu: np.ndarray) -> np.ndarray:
    """Values at points given in macro barycentric coordinates, shape (npts, ncomp)"""
    mu = np.atleast_2d(mu)
    out = np.zeros((mu.shape[0], p.ncomp))
    for r, point in enumerate(mu):
        child, local = ls.macro_to_child(point)
        out[r] = p.evaluate(child, local.reshape(1, -1))[0]
    return out
