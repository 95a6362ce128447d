"""Global finite element spaces on refined meshes and their DOF maps"""

from dataclasses import dataclass, field
from enum import Enum
from math import comb
from typing import Dict, Hashable, List, Optional, Sequence, Tuple

import numpy as np
import structlog

from src.config.models import Settings, get_settings
from src.elements.bubbles import BubbleCache
from src.errors import DimensionRule, UnsupportedKind
from src.mesh.entities import EntityTables, enumerate_entities
from src.mesh.simplex_mesh import RefinedMesh, barycentric_coordinates
from src.monitoring.metrics import spaces_built
from src.poly.bary import BaryPoly, exponent_array
from src.poly.lagrange import lagrange_basis, node_key
from src.poly.split import (
    Continuity,
    SplitPiecewisePoly,
    divergence,
    evaluate_at_macro_points,
    lambda_system,
)
from src.spaces.local_elements import (
    NODAL_KINDS,
    build_local_element,
    macro_lagrange_fields,
    unit,
)

logger = structlog.get_logger()

CellBasis = List[Tuple[int, SplitPiecewisePoly]]


class SpaceKind(str, Enum):
    """Global space kinds"""

    CG_REFINED = "CG_REFINED"
    CG_MACRO = "CG_MACRO"
    DG_REFINED = "DG_REFINED"
    DG_MACRO = "DG_MACRO"
    W_R = "W_R"
    BR = "BR"
    MF = "MF"
    VR = "VR"
    VDIV = "VDIV"
    VH68 = "VH68"
    SUM = "SUM"


@dataclass
class DofMap:
    """
    Global numbering of DOF keys

    Keys start with an entity tag: "n" Lagrange node, "dg" cell interior,
    "v" vertex value, "dv" vertex divergence, "e" edge integral, "f" facet flux.
    """

    keys: List[Hashable] = field(default_factory=list)
    index: Dict[Hashable, int] = field(default_factory=dict)
    facet_signs: Dict[Tuple[int, Tuple[int, ...]], int] = field(default_factory=dict)

    def number(self, key: Hashable) -> int:
        if key not in self.index:
            self.index[key] = len(self.keys)
            self.keys.append(key)
        return self.index[key]

    @property
    def n_dofs(self) -> int:
        return len(self.keys)

    def entity_counts(self) -> Dict[str, int]:
        counts: Dict[str, int] = {}
        for key in self.keys:
            tag = str(key[0]) if not isinstance(key[0], int) else f"part{key[0]}:{key[1][0]}"
            counts[tag] = counts.get(tag, 0) + 1
        return counts


@dataclass(eq=False)
class FeSpace:
    """
    A global space given by its basis fields restricted to every macro cell

    ``cell_basis[c]`` lists (global id, field on the split of cell c) for every
    basis function whose support meets cell c.
    """

    kind: SpaceKind
    refined: RefinedMesh
    ncomp: int
    degree: int
    cell_basis: List[CellBasis]
    dofmap: DofMap
    label: str
    dirichlet: bool = True

    @property
    def n_dofs(self) -> int:
        return self.dofmap.n_dofs

    @property
    def dim(self) -> int:
        return self.refined.dim

    @property
    def is_velocity(self) -> bool:
        return self.ncomp == self.dim

    def field_on_cell(self, cell: int, coefficients: np.ndarray) -> SplitPiecewisePoly:
        """sum_g coefficients[g] phi_g restricted to one cell"""
        n = self.dim + 1
        total = SplitPiecewisePoly(
            cell, [BaryPoly.zeros(n, self.degree, self.ncomp) for _ in range(n)], Continuity.L2
        )
        for gid, phi in self.cell_basis[cell]:
            if coefficients[gid] != 0.0:
                total = total + phi * float(coefficients[gid])
        return total

    def permuted(self, permutation: Sequence[int]) -> "FeSpace":
        """Same space with global id g renumbered to permutation[g]"""
        dofmap = DofMap(facet_signs=dict(self.dofmap.facet_signs))
        inverse = np.argsort(permutation)
        for new in range(self.n_dofs):
            dofmap.number(self.dofmap.keys[inverse[new]])
        cell_basis = [[(int(permutation[g]), phi) for g, phi in basis] for basis in self.cell_basis]
        return FeSpace(self.kind, self.refined, self.ncomp, self.degree, cell_basis, dofmap, self.label, self.dirichlet)


def _boundary_lookup(refined: RefinedMesh) -> Dict[int, List[frozenset]]:
    lookup: Dict[int, List[frozenset]] = {}
    for facet in refined.macro.boundary_facets:
        for v in facet:
            lookup.setdefault(v, []).append(frozenset(facet))
    return lookup


def _on_boundary(support: Sequence[int], lookup: Dict[int, List[frozenset]]) -> bool:
    support = set(support)
    first = next(iter(support))
    return any(support <= facet for facet in lookup.get(first, []))


def _finish(space: FeSpace) -> FeSpace:
    spaces_built.labels(kind=space.kind.value).inc()
    logger.info("space_built", kind=space.label, n_dofs=space.n_dofs, cells=space.refined.n_cells)
    return space


def _collect(
    entries: Dict[Hashable, List[BaryPoly]], cell: int, dofmap: DofMap, degree: int, ncomp: int, n: int
) -> CellBasis:
    out = []
    for key, pieces in entries.items():
        full = [p if p is not None else BaryPoly.zeros(n, degree, ncomp) for p in pieces]
        out.append((dofmap.number(key), SplitPiecewisePoly(cell, full, Continuity.C0)))
    return out


def lagrange_refined_space(
    refined: RefinedMesh, degree: int, ncomp: int, dirichlet: bool, kind: SpaceKind, label: str
) -> FeSpace:
    """Continuous Lagrange space on the refined mesh (scalar or vector)"""
    d = refined.dim
    n = d + 1
    scalar = lagrange_basis(n, degree)
    lattice = exponent_array(n, degree)
    lookup = _boundary_lookup(refined)
    dofmap = DofMap()
    cell_basis: List[CellBasis] = []
    for c in range(refined.n_cells):
        entries: Dict[Hashable, List[Optional[BaryPoly]]] = {}
        for i, child in enumerate(refined.children[c]):
            for j, beta in enumerate(lattice):
                key = node_key(child.vertex_ids, beta)
                if dirichlet and _on_boundary([v for v, _ in key], lookup):
                    continue
                piece = scalar.component(j)
                for comp in range(ncomp):
                    full_key = ("n", key, comp)
                    slot = entries.setdefault(full_key, [None] * n)
                    slot[i] = piece.outer(unit(ncomp, comp)) if ncomp > 1 else piece
        cell_basis.append(_collect(entries, c, dofmap, degree, ncomp, n))
    return _finish(FeSpace(kind, refined, ncomp, degree, cell_basis, dofmap, label, dirichlet))


def lagrange_macro_space(refined: RefinedMesh, degree: int, cache: BubbleCache, label: str) -> FeSpace:
    """Continuous vector Lagrange space of the macro mesh, restricted to the splits"""
    d = refined.dim
    lattice = exponent_array(d + 1, degree)
    lookup = _boundary_lookup(refined)
    dofmap = DofMap()
    cell_basis: List[CellBasis] = []
    for c, cell in enumerate(refined.macro.cells):
        fields = macro_lagrange_fields(cache.lambda_system(c), degree)
        basis: CellBasis = []
        for j, beta in enumerate(lattice):
            key = node_key(cell.vertex_ids, beta)
            if _on_boundary([v for v, _ in key], lookup):
                continue
            for comp in range(d):
                basis.append((dofmap.number(("n", key, comp)), fields[j].outer(unit(d, comp))))
        cell_basis.append(basis)
    return _finish(FeSpace(SpaceKind.CG_MACRO, refined, d, degree, cell_basis, dofmap, label))


def dg_refined_space(refined: RefinedMesh, degree: int, label: str) -> FeSpace:
    """Discontinuous scalar polynomials of the given degree on every child"""
    n = refined.dim + 1
    scalar = lagrange_basis(n, degree)
    dofmap = DofMap()
    cell_basis: List[CellBasis] = []
    for c in range(refined.n_cells):
        basis: CellBasis = []
        for i in range(n):
            for j in range(scalar.ncomp):
                pieces = [BaryPoly.zeros(n, degree, 1) for _ in range(n)]
                pieces[i] = scalar.component(j)
                phi = SplitPiecewisePoly(c, pieces, Continuity.L2)
                basis.append((dofmap.number(("dg", c, i, j)), phi))
        cell_basis.append(basis)
    return _finish(FeSpace(SpaceKind.DG_REFINED, refined, 1, degree, cell_basis, dofmap, label, False))


def dg_macro_space(refined: RefinedMesh, degree: int, cache: BubbleCache, label: str) -> FeSpace:
    """Discontinuous scalar polynomials of the given degree on every macro cell"""
    dofmap = DofMap()
    cell_basis: List[CellBasis] = []
    for c in range(refined.n_cells):
        fields = macro_lagrange_fields(cache.lambda_system(c), degree)
        cell_basis.append([(dofmap.number(("dg", c, j)), f) for j, f in enumerate(fields)])
    return _finish(FeSpace(SpaceKind.DG_MACRO, refined, 1, degree, cell_basis, dofmap, label, False))


def _global_key(dof: Tuple, c: int, refined: RefinedMesh, tables: EntityTables) -> Tuple[Optional[Tuple], int]:
    """Global key and orientation sign of a local DOF (key None when fixed by the boundary condition)"""
    ids = refined.macro.cells[c].vertex_ids
    tag = dof[0]
    if tag == "v":
        vid = ids[dof[1]]
        return (("v", vid, dof[2]) if tables.is_interior_vertex(vid) else None), 1
    if tag == "dv":
        return ("dv", ids[dof[1]]), 1
    if tag == "e":
        edge = tuple(sorted((ids[dof[1][0]], ids[dof[1][1]])))
        return (("e", edge, dof[2]) if tables.is_interior_edge(edge) else None), 1
    if tag == "f":
        facet = refined.macro.cells[c].facet(dof[1])
        if not tables.is_interior_facet(facet):
            return None, 1
        return ("f", facet), tables.facet_sign(c, facet)
    raise UnsupportedKind(f"unknown DOF tag {tag}")


def nodal_space(
    refined: RefinedMesh,
    kind: SpaceKind,
    cache: BubbleCache,
    tables: Optional[EntityTables] = None,
    settings: Optional[Settings] = None,
) -> FeSpace:
    """
    Space glued through the local DOFs of a nodal element (BR, MF, VR, VDIV, VH68)

    Local basis functions dual to DOFs on the boundary of the domain are dropped;
    flux DOFs follow the canonical facet normal.
    """
    settings = settings or get_settings()
    if kind.value not in NODAL_KINDS:
        raise UnsupportedKind(f"{kind.value} is not a nodal kind")
    tables = tables or enumerate_entities(refined.macro)
    dofmap = DofMap()
    cell_basis: List[CellBasis] = []
    degree = 0
    for c in range(refined.n_cells):
        element = build_local_element(kind.value, cache.lambda_system(c), cache, settings)
        basis: CellBasis = []
        for dof, phi in zip(element.dofs, element.basis):
            key, sign = _global_key(dof, c, refined, tables)
            if key is None:
                continue
            if key[0] == "f":
                dofmap.facet_signs[(c, key[1])] = sign
            basis.append((dofmap.number(key), phi * float(sign) if sign != 1 else phi))
            degree = max(degree, phi.degree)
        cell_basis.append(basis)
    return _finish(FeSpace(kind, refined, refined.dim, degree, cell_basis, dofmap, kind.value))


def direct_sum(parts: Sequence[FeSpace], label: str) -> FeSpace:
    """Union of bases with offset global ids (independence is checked at assembly)"""
    refined = parts[0].refined
    dofmap = DofMap()
    cell_basis: List[CellBasis] = [[] for _ in range(refined.n_cells)]
    offset = 0
    for p, part in enumerate(parts):
        for key in part.dofmap.keys:
            dofmap.number((p, key))
        dofmap.facet_signs.update(part.dofmap.facet_signs)
        for c in range(refined.n_cells):
            cell_basis[c].extend((offset + g, phi) for g, phi in part.cell_basis[c])
        offset += part.n_dofs
    degree = max(part.degree for part in parts)
    space = FeSpace(SpaceKind.SUM, refined, parts[0].ncomp, degree, cell_basis, dofmap, label)
    return _finish(space)


def build_space(
    refined: RefinedMesh,
    kind: SpaceKind,
    k: int = 1,
    cache: Optional[BubbleCache] = None,
    settings: Optional[Settings] = None,
) -> FeSpace:
    """
    Build a global space on a refined mesh

    Args:
        refined: Refined mesh
        kind: Space kind
        k: Polynomial degree for Lagrange and DG kinds
        cache: Bubble cache shared between spaces of the same mesh
        settings: Numerical settings

    Returns:
        FeSpace with a consistent DofMap

    Raises:
        UnsupportedKind: Unknown kind or SUM (use direct_sum)
        DimensionRule: Degree outside the supported range for the kind
    """
    settings = settings or get_settings()
    cache = cache or BubbleCache(refined, settings)
    if kind in (SpaceKind.CG_REFINED, SpaceKind.CG_MACRO) and not 1 <= k <= settings.degree_cap:
        raise DimensionRule(f"{kind.value} needs 1 <= k <= {settings.degree_cap}, got {k}")
    if kind in (SpaceKind.DG_REFINED, SpaceKind.DG_MACRO) and not 0 <= k <= settings.degree_cap:
        raise DimensionRule(f"{kind.value} needs 0 <= k <= {settings.degree_cap}, got {k}")
    d = refined.dim
    if kind == SpaceKind.CG_REFINED:
        return lagrange_refined_space(refined, k, d, True, kind, f"P{k}c(Tr)")
    if kind == SpaceKind.CG_MACRO:
        return lagrange_macro_space(refined, k, cache, f"P{k}c(T)")
    if kind == SpaceKind.DG_REFINED:
        return dg_refined_space(refined, k, f"P{k}(Tr)")
    if kind == SpaceKind.DG_MACRO:
        return dg_macro_space(refined, k, cache, f"P{k}(T)")
    if kind == SpaceKind.W_R:
        return lagrange_refined_space(refined, 1, 1, False, kind, "W_R")
    if kind.value in NODAL_KINDS:
        return nodal_space(refined, kind, cache, settings=settings)
    raise UnsupportedKind(f"cannot build {kind.value} directly")


def _lagrange_count(tables: EntityTables, n_cells: int, d: int, k: int, dirichlet: bool) -> int:
    """Lagrange nodes per entity: C(k-1, m) on an m-dimensional entity"""
    vertices = tables.n_interior_vertices if dirichlet else tables.n_vertices
    edges = tables.n_interior_edges if dirichlet else tables.n_edges
    facets = tables.n_interior_facets if dirichlet else tables.n_facets
    total = vertices + comb(k - 1, 1) * edges + comb(k - 1, d) * n_cells
    if d == 3:
        total += comb(k - 1, 2) * facets
    return total


def expected_dimension(refined: RefinedMesh, kind: SpaceKind, k: int = 1) -> Optional[int]:
    """Closed-form global dimension from entity counts (None when no formula applies)"""
    d = refined.dim
    macro = enumerate_entities(refined.macro)
    if kind in (SpaceKind.BR, SpaceKind.MF):
        return macro.n_interior_facets
    if kind == SpaceKind.VDIV:
        return macro.n_vertices + macro.n_interior_facets
    if kind == SpaceKind.VH68:
        return d * macro.n_interior_vertices + macro.n_vertices + macro.n_interior_facets
    if kind == SpaceKind.VR:
        total = d * macro.n_interior_vertices + macro.n_vertices + d * macro.n_interior_edges
        return total + (macro.n_interior_facets if d >= 3 else 0)
    if kind == SpaceKind.DG_MACRO:
        return refined.n_cells * comb(k + d, d)
    if kind == SpaceKind.DG_REFINED:
        return refined.n_cells * (d + 1) * comb(k + d, d)
    if d > 3:
        return None
    if kind == SpaceKind.CG_MACRO:
        return d * _lagrange_count(macro, refined.n_cells, d, k, True)
    fine = enumerate_entities(refined.as_mesh())
    n_children = refined.n_cells * (d + 1)
    if kind == SpaceKind.CG_REFINED:
        return d * _lagrange_count(fine, n_children, d, k, True)
    if kind == SpaceKind.W_R:
        return fine.n_vertices
    return None


def _facet_samples(points: np.ndarray, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    weights = rng.dirichlet(np.ones(points.shape[0]), size=n_samples)
    return weights @ points


def conformity_residuals(
    space: FeSpace, rng: Optional[np.random.Generator] = None, n_samples: int = 12
) -> Dict[str, float]:
    """
    Largest jump of basis fields (and of their divergence for velocity spaces)
    across interior macro facets, and largest boundary value for H0^1 spaces
    """
    rng = rng or np.random.default_rng(0)
    refined = space.refined
    macro = refined.macro
    tables = enumerate_entities(macro)
    out = {"interface": 0.0, "boundary": 0.0, "div_interface": 0.0}
    fields = [dict(basis) for basis in space.cell_basis]
    systems = {}

    def system(c):
        if c not in systems:
            systems[c] = lambda_system(refined, c, exact=False)
        return systems[c]

    def values(c, gid, physical, div=False):
        ls = system(c)
        mu = np.array([barycentric_coordinates(ls.macro_vertices, x) for x in physical])
        phi = fields[c].get(gid)
        if phi is None:
            return np.zeros((physical.shape[0], 1 if div else space.ncomp))
        target = divergence(phi, ls) if div else phi
        return evaluate_at_macro_points(target, ls, np.clip(mu, 0.0, None))

    for facet, cells in zip(tables.facets, tables.facet_cells):
        physical = _facet_samples(macro.vertices[list(facet)], n_samples, rng)
        if len(cells) == 2:
            a, b = cells
            for gid in set(fields[a]) | set(fields[b]):
                jump = values(a, gid, physical) - values(b, gid, physical)
                out["interface"] = max(out["interface"], float(np.max(np.abs(jump))))
                if space.is_velocity and space.kind in (SpaceKind.VR, SpaceKind.VDIV, SpaceKind.VH68):
                    jump = values(a, gid, physical, True) - values(b, gid, physical, True)
                    out["div_interface"] = max(out["div_interface"], float(np.max(np.abs(jump))))
        elif space.dirichlet:
            (a,) = cells
            for gid in fields[a]:
                out["boundary"] = max(out["boundary"], float(np.max(np.abs(values(a, gid, physical)))))
    return out
