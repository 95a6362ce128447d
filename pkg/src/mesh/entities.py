"""Global numbering of vertices, edges and facets with boundary flags and facet orientation"""

from dataclasses import dataclass
from itertools import combinations
from typing import Dict, FrozenSet, List, Tuple

import numpy as np

from src.mesh.simplex_mesh import FacetKey, MacroMesh, barycentric_gradients

EdgeKey = Tuple[int, int]


@dataclass(frozen=True, eq=False)
class EntityTables:
    """Vertex, edge and facet tables of a simplicial mesh"""

    n_vertices: int
    boundary_vertices: FrozenSet[int]
    edges: Tuple[EdgeKey, ...]
    edge_index: Dict[EdgeKey, int]
    boundary_edges: FrozenSet[EdgeKey]
    facets: Tuple[FacetKey, ...]
    facet_index: Dict[FacetKey, int]
    facet_cells: Tuple[Tuple[int, ...], ...]

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_facets(self) -> int:
        return len(self.facets)

    @property
    def n_interior_edges(self) -> int:
        return self.n_edges - len(self.boundary_edges)

    @property
    def n_interior_vertices(self) -> int:
        return self.n_vertices - len(self.boundary_vertices)

    @property
    def interior_facets(self) -> List[FacetKey]:
        return [f for f, cells in zip(self.facets, self.facet_cells) if len(cells) == 2]

    @property
    def n_interior_facets(self) -> int:
        return len(self.interior_facets)

    def is_interior_facet(self, facet: FacetKey) -> bool:
        return len(self.facet_cells[self.facet_index[facet]]) == 2

    def is_interior_edge(self, edge: EdgeKey) -> bool:
        return tuple(sorted(edge)) not in self.boundary_edges

    def is_interior_vertex(self, vertex: int) -> bool:
        return vertex not in self.boundary_vertices

    def facet_sign(self, cell: int, facet: FacetKey) -> int:
        """+1 when ``cell`` owns the canonical normal of ``facet`` (lowest adjacent id), else -1"""
        cells = self.facet_cells[self.facet_index[facet]]
        return 1 if cell == min(cells) else -1


def enumerate_entities(mesh: MacroMesh) -> EntityTables:
    """
    Number edges and facets of a mesh in first-seen order over cells

    Args:
        mesh: Simplicial mesh

    Returns:
        EntityTables with interior/boundary flags
    """
    edge_index: Dict[EdgeKey, int] = {}
    facet_index: Dict[FacetKey, int] = {}
    facet_cells: List[List[int]] = []

    for c, cell in enumerate(mesh.cells):
        for a, b in combinations(sorted(cell.vertex_ids), 2):
            if (a, b) not in edge_index:
                edge_index[(a, b)] = len(edge_index)
        for facet in cell.facets():
            if facet not in facet_index:
                facet_index[facet] = len(facet_index)
                facet_cells.append([])
            facet_cells[facet_index[facet]].append(c)

    boundary_edges = set()
    for facet in mesh.boundary_facets:
        boundary_edges.update(combinations(sorted(facet), 2))

    return EntityTables(
        n_vertices=mesh.n_vertices,
        boundary_vertices=mesh.boundary_vertices,
        edges=tuple(sorted(edge_index, key=edge_index.get)),
        edge_index=edge_index,
        boundary_edges=frozenset(boundary_edges),
        facets=tuple(sorted(facet_index, key=facet_index.get)),
        facet_index=facet_index,
        facet_cells=tuple(tuple(cells) for cells in facet_cells),
    )


def canonical_normal(mesh: MacroMesh, tables: EntityTables, facet: FacetKey) -> np.ndarray:
    """Unit normal of a facet pointing out of its lowest-id adjacent cell"""
    owner = min(tables.facet_cells[tables.facet_index[facet]])
    cell = mesh.cells[owner]
    opposite = next(i for i, v in enumerate(cell.vertex_ids) if v not in facet)
    grad = barycentric_gradients(mesh.cell_points(owner))[opposite]
    return -grad / np.linalg.norm(grad)
