"""Simplicial meshes and their barycentric (Alfeld) refinement in any dimension"""

from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from math import factorial
from typing import Dict, FrozenSet, List, Optional, Sequence, Tuple, Union

import numpy as np
import structlog
from scipy.optimize import linprog

from src.config.models import Settings, get_settings
from src.errors import (
    DegenerateCell,
    DimensionMismatch,
    NonConforming,
    SplitPointOnBoundary,
    SplitPointOutside,
)

logger = structlog.get_logger()

FacetKey = Tuple[int, ...]

# Relative tolerance for volumes and split point positions
GEOMETRY_TOL = 1e-12


@dataclass(frozen=True)
class Simplex:
    """A simplex given by indices into a vertex table"""

    vertex_ids: Tuple[int, ...]
    orientation_sign: int = 1

    @property
    def dim(self) -> int:
        return len(self.vertex_ids) - 1

    def facet(self, i: int) -> FacetKey:
        """Sorted vertex ids of the facet opposite local vertex i"""
        return tuple(sorted(v for j, v in enumerate(self.vertex_ids) if j != i))

    def facets(self) -> List[FacetKey]:
        return [self.facet(i) for i in range(len(self.vertex_ids))]


def signed_volume(points: np.ndarray) -> float:
    """Signed volume of the simplex with vertex rows ``points`` (shape (d+1, d))"""
    d = points.shape[1]
    return float(np.linalg.det(points[1:] - points[0])) / factorial(d)


def barycentric_gradients(points: np.ndarray) -> np.ndarray:
    """
    Constant gradients of the barycentric coordinates of a simplex

    Args:
        points: Vertex coordinates, shape (d+1, d)

    Returns:
        Array of shape (d+1, d); row r is the gradient of the r-th coordinate
    """
    n = points.shape[0]
    system = np.vstack([np.ones(n), points.T])
    return np.linalg.inv(system)[:, 1:]


def barycentric_coordinates(points: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of the point ``x`` with respect to a simplex"""
    n = points.shape[0]
    system = np.vstack([np.ones(n), points.T])
    return np.linalg.solve(system, np.concatenate([[1.0], np.asarray(x, dtype=float)]))


def diameter(points: np.ndarray) -> float:
    """Longest edge of a simplex"""
    return max(float(np.linalg.norm(a - b)) for a, b in combinations(points, 2))


def inradius(points: np.ndarray) -> float:
    """Inradius d|K|/sum|F_i|, which equals 1/sum|grad lambda_i|"""
    grads = barycentric_gradients(points)
    return 1.0 / float(np.linalg.norm(grads, axis=1).sum())


def shape_constant(points: np.ndarray) -> float:
    """Shape-regularity constant h/rho"""
    return diameter(points) / inradius(points)


@dataclass(frozen=True, eq=False)
class MacroMesh:
    """Conforming simplicial mesh with identified boundary facets"""

    vertices: np.ndarray
    cells: Tuple[Simplex, ...]
    boundary_facets: FrozenSet[FacetKey]

    @property
    def dim(self) -> int:
        return int(self.vertices.shape[1])

    @property
    def n_vertices(self) -> int:
        return int(self.vertices.shape[0])

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def cell_points(self, cell: int) -> np.ndarray:
        return self.vertices[list(self.cells[cell].vertex_ids)]

    def volume(self, cell: int) -> float:
        return abs(signed_volume(self.cell_points(cell)))

    def diameter(self, cell: int) -> float:
        return diameter(self.cell_points(cell))

    @property
    def mesh_size(self) -> float:
        return max(self.diameter(c) for c in range(self.n_cells))

    @cached_property
    def boundary_vertices(self) -> FrozenSet[int]:
        return frozenset(v for facet in self.boundary_facets for v in facet)

    def translated(self, shift: Sequence[float]) -> "MacroMesh":
        """Rigidly translated copy"""
        return MacroMesh(
            vertices=self.vertices + np.asarray(shift, dtype=float),
            cells=self.cells,
            boundary_facets=self.boundary_facets,
        )

    def transformed(self, matrix: np.ndarray, shift: Optional[Sequence[float]] = None) -> "MacroMesh":
        """Copy under x -> matrix @ x + shift (orientation kept positive)"""
        vertices = self.vertices @ np.asarray(matrix, dtype=float).T
        if shift is not None:
            vertices = vertices + np.asarray(shift, dtype=float)
        return build_macro_mesh(vertices, [c.vertex_ids for c in self.cells], check_overlaps=False)


def _facets_overlap(a: np.ndarray, b: np.ndarray, scale: float) -> bool:
    """True when two facets lie in one hyperplane and share a region of positive measure"""
    d = a.shape[1]
    if d == 1:
        return bool(np.allclose(a, b, atol=GEOMETRY_TOL * scale))
    # Normal of the hyperplane through a
    _, _, vh = np.linalg.svd(a[1:] - a[0])
    normal = vh[-1]
    if np.max(np.abs((b - a[0]) @ normal)) > GEOMETRY_TOL * scale * 1e3:
        return False
    if np.any(b.max(axis=0) < a.min(axis=0) - GEOMETRY_TOL * scale) or np.any(
        a.max(axis=0) < b.min(axis=0) - GEOMETRY_TOL * scale
    ):
        return False
    # maximize t with weights (wa, wb) >= t and sum(wa a) == sum(wb b)
    na, nb = a.shape[0], b.shape[0]
    n_var = na + nb + 1
    cost = np.zeros(n_var)
    cost[-1] = -1.0
    a_eq = np.zeros((d + 2, n_var))
    a_eq[:d, :na] = a.T
    a_eq[:d, na : na + nb] = -b.T
    a_eq[d, :na] = 1.0
    a_eq[d + 1, na : na + nb] = 1.0
    b_eq = np.zeros(d + 2)
    b_eq[d:] = 1.0
    a_ub = np.zeros((na + nb, n_var))
    a_ub[:, : na + nb] = -np.eye(na + nb)
    a_ub[:, -1] = 1.0
    bounds = [(0, None)] * (na + nb) + [(None, 1.0)]
    result = linprog(cost, A_ub=a_ub, b_ub=np.zeros(na + nb), A_eq=a_eq, b_eq=b_eq, bounds=bounds)
    return bool(result.status == 0 and -result.fun > 1e-9)


def build_macro_mesh(
    vertices: Union[np.ndarray, Sequence[Sequence[float]]],
    cells: Sequence[Sequence[int]],
    check_overlaps: bool = True,
) -> MacroMesh:
    """
    Build a conforming simplicial mesh

    Cells with negative volume are reoriented (last two vertices swapped) and
    marked with ``orientation_sign = -1``.

    Args:
        vertices: Vertex coordinates, shape (n, d)
        cells: Per cell, d+1 distinct vertex ids (0-based)
        check_overlaps: Detect hanging facets by a coplanar overlap test

    Returns:
        Validated MacroMesh

    Raises:
        DimensionMismatch: Wrong array shapes or out-of-range ids
        DegenerateCell: Repeated ids or zero volume
        NonConforming: A facet shared by more than two cells, or a hanging facet
    """
    points = np.asarray(vertices, dtype=float)
    if points.ndim != 2 or points.shape[1] < 1:
        raise DimensionMismatch(f"vertices must have shape (n, d), got {points.shape}")
    d = points.shape[1]
    if not np.all(np.isfinite(points)):
        raise DimensionMismatch("vertex coordinates must be finite")

    simplices: List[Simplex] = []
    for index, cell in enumerate(cells):
        ids = tuple(int(v) for v in cell)
        if len(ids) != d + 1:
            raise DimensionMismatch(f"cell {index} has {len(ids)} vertices, expected {d + 1}")
        if any(v < 0 or v >= len(points) for v in ids):
            raise DimensionMismatch(f"cell {index} references a missing vertex")
        if len(set(ids)) != len(ids):
            raise DegenerateCell(f"cell {index} repeats a vertex id")
        cell_points = points[list(ids)]
        volume = signed_volume(cell_points)
        if abs(volume) <= GEOMETRY_TOL * diameter(cell_points) ** d:
            raise DegenerateCell(f"cell {index} has zero volume")
        if volume < 0:
            ids = ids[:-2] + (ids[-1], ids[-2])
            simplices.append(Simplex(ids, orientation_sign=-1))
        else:
            simplices.append(Simplex(ids, orientation_sign=1))

    counts: Dict[FacetKey, int] = {}
    for simplex in simplices:
        for facet in simplex.facets():
            counts[facet] = counts.get(facet, 0) + 1
    crowded = [facet for facet, count in counts.items() if count > 2]
    if crowded:
        raise NonConforming(f"facet {crowded[0]} is shared by more than two cells")
    boundary = frozenset(facet for facet, count in counts.items() if count == 1)

    if check_overlaps and len(boundary) > 1:
        scale = float(np.max(np.ptp(points, axis=0))) or 1.0
        ordered = sorted(boundary)
        for first, second in combinations(ordered, 2):
            if set(first) == set(second):
                continue
            if _facets_overlap(points[list(first)], points[list(second)], scale):
                raise NonConforming(f"hanging facets {first} and {second} overlap")

    mesh = MacroMesh(vertices=points, cells=tuple(simplices), boundary_facets=boundary)
    logger.debug(
        "macro_mesh_built",
        dim=d,
        vertices=mesh.n_vertices,
        cells=mesh.n_cells,
        boundary_facets=len(boundary),
    )
    return mesh


@dataclass(frozen=True)
class BarycenterSplit:
    """Split every cell at its barycenter"""


@dataclass(frozen=True, eq=False)
class ExplicitSplit:
    """Split cell c at ``points[c]``"""

    points: np.ndarray


SplitRule = Union[BarycenterSplit, ExplicitSplit]


@dataclass(frozen=True, eq=False)
class RefinedMesh:
    """
    Barycentric refinement of a macro mesh

    Vertex numbering: macro vertices keep their ids, the split point of macro
    cell c gets id ``n_macro_vertices + c``. Child i of a cell omits macro
    vertex i; its vertices are [split point] + [macro vertices except i].
    """

    macro: MacroMesh
    split_points: np.ndarray
    children: Tuple[Tuple[Simplex, ...], ...]

    @property
    def dim(self) -> int:
        return self.macro.dim

    @property
    def n_cells(self) -> int:
        return self.macro.n_cells

    @cached_property
    def vertices(self) -> np.ndarray:
        return np.vstack([self.macro.vertices, self.split_points])

    def split_vertex_id(self, cell: int) -> int:
        return self.macro.n_vertices + cell

    def child_points(self, cell: int, i: int) -> np.ndarray:
        return self.vertices[list(self.children[cell][i].vertex_ids)]

    def child_volume(self, cell: int, i: int) -> float:
        return abs(signed_volume(self.child_points(cell, i)))

    def child_volumes(self, cell: int) -> np.ndarray:
        return np.array([self.child_volume(cell, i) for i in range(self.dim + 1)])

    def submesh(self, cell: int) -> "RefinedMesh":
        """The refinement of a single macro cell as a standalone mesh"""
        points = self.macro.cell_points(cell)
        macro = build_macro_mesh(points, [list(range(self.dim + 1))], check_overlaps=False)
        return refine(macro, ExplicitSplit(self.split_points[cell : cell + 1]), warn=False)

    def as_mesh(self) -> MacroMesh:
        """The refined mesh as a plain simplicial mesh (child order preserved)"""
        cells = [child.vertex_ids for children in self.children for child in children]
        return build_macro_mesh(self.vertices, cells, check_overlaps=False)


def refine(
    mesh: MacroMesh,
    rule: Optional[SplitRule] = None,
    settings: Optional[Settings] = None,
    warn: bool = True,
) -> RefinedMesh:
    """
    Split every macro cell into d+1 children at an interior point

    Args:
        mesh: Macro mesh
        rule: BarycenterSplit (default) or ExplicitSplit
        settings: Numerical settings (shape warning threshold)
        warn: Log a warning for children above the shape threshold

    Returns:
        RefinedMesh with child i of each cell omitting macro vertex i

    Raises:
        SplitPointOutside: Explicit point outside its cell
        SplitPointOnBoundary: Explicit point on the boundary of its cell
    """
    settings = settings or get_settings()
    rule = rule or BarycenterSplit()
    d = mesh.dim

    if isinstance(rule, ExplicitSplit):
        split_points = np.asarray(rule.points, dtype=float).reshape(mesh.n_cells, d)
        for c in range(mesh.n_cells):
            bary = barycentric_coordinates(mesh.cell_points(c), split_points[c])
            if bary.min() < -GEOMETRY_TOL:
                raise SplitPointOutside(f"split point of cell {c} lies outside the cell")
            if bary.min() <= GEOMETRY_TOL:
                raise SplitPointOnBoundary(f"split point of cell {c} lies on the cell boundary")
    else:
        split_points = np.array([mesh.cell_points(c).mean(axis=0) for c in range(mesh.n_cells)])

    vertices = np.vstack([mesh.vertices, split_points])
    children = []
    for c, cell in enumerate(mesh.cells):
        split_id = mesh.n_vertices + c
        kids = []
        for i in range(d + 1):
            ids = (split_id,) + tuple(v for j, v in enumerate(cell.vertex_ids) if j != i)
            sign = 1 if signed_volume(vertices[list(ids)]) > 0 else -1
            kids.append(Simplex(ids, orientation_sign=sign))
        children.append(tuple(kids))

    refined = RefinedMesh(macro=mesh, split_points=split_points, children=tuple(children))

    for c in range(mesh.n_cells):
        total = refined.child_volumes(c).sum()
        if abs(total - mesh.volume(c)) > GEOMETRY_TOL * 1e2 * mesh.volume(c):
            raise DegenerateCell(f"children of cell {c} do not partition it")
        if warn:
            worst = max(shape_constant(refined.child_points(c, i)) for i in range(d + 1))
            if worst > settings.shape_warn_threshold:
                logger.warning(
                    "split_shape_threshold_exceeded",
                    cell=c,
                    shape_constant=worst,
                    threshold=settings.shape_warn_threshold,
                )

    logger.debug(
        "mesh_refined",
        dim=d,
        cells=mesh.n_cells,
        rule=type(rule).__name__,
    )
    return refined


@dataclass(frozen=True, eq=False)
class FaceGeometry:
    """Facet F_i of a macro cell seen from its split point"""

    face_id: FacetKey
    normal: np.ndarray
    measure: float
    height: float


def face_geometry(refined: RefinedMesh, cell: int, i: int) -> FaceGeometry:
    """
    Outward unit normal, measure and split-point distance of facet F_i

    Args:
        refined: Refined mesh
        cell: Macro cell id
        i: Local index (0-based) of the macro vertex opposite the facet

    Returns:
        FaceGeometry with grad(lambda_0) on child i equal to -normal/height
    """
    d = refined.dim
    if not 0 <= i <= d:
        raise IndexError(f"face index {i} out of range for dimension {d}")
    points = refined.macro.cell_points(cell)
    grad = barycentric_gradients(points)[i]
    length = float(np.linalg.norm(grad))
    mu_split = barycentric_coordinates(points, refined.split_points[cell])
    return FaceGeometry(
        face_id=refined.macro.cells[cell].facet(i),
        normal=-grad / length,
        measure=d * refined.macro.volume(cell) * length,
        height=float(mu_split[i]) / length,
    )


@dataclass(frozen=True, eq=False)
class ShapeReport:
    """Shape-regularity constants per macro cell and per split"""

    h: np.ndarray
    rho: np.ndarray
    shape: np.ndarray
    child_shape: np.ndarray
    flagged: Tuple[int, ...]

    def to_dict(self) -> Dict[str, object]:
        return {
            "h": self.h.tolist(),
            "rho": self.rho.tolist(),
            "shape": self.shape.tolist(),
            "child_shape": self.child_shape.tolist(),
            "flagged": list(self.flagged),
        }


def shape_report(refined: RefinedMesh, settings: Optional[Settings] = None) -> ShapeReport:
    """Diameters, inradii and C_K = h_K/rho_K, with the worst child constant per cell"""
    settings = settings or get_settings()
    macro = refined.macro
    h = np.array([macro.diameter(c) for c in range(macro.n_cells)])
    rho = np.array([inradius(macro.cell_points(c)) for c in range(macro.n_cells)])
    child_shape = np.array(
        [
            max(shape_constant(refined.child_points(c, i)) for i in range(refined.dim + 1))
            for c in range(macro.n_cells)
        ]
    )
    flagged = tuple(int(c) for c in np.nonzero(child_shape > settings.shape_warn_threshold)[0])
    return ShapeReport(h=h, rho=rho, shape=h / rho, child_shape=child_shape, flagged=flagged)
