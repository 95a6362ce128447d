"""Tests for simplicial meshes, entity tables and barycentric refinement"""

import numpy as np
import pytest

from src.errors import (
    DegenerateCell,
    DimensionMismatch,
    DimensionRule,
    MeshFormatError,
    NonConforming,
    SplitPointOnBoundary,
    SplitPointOutside,
)
from src.mesh.builtin import (
    builtin_mesh,
    cube_mesh,
    mesh_family,
    random_interior_point,
    random_simplex,
    red_refine,
    reference_simplex,
    square_mesh,
)
from src.mesh.entities import canonical_normal, enumerate_entities
from src.mesh.io import parse_mesh, read_mesh, read_points, write_mesh
from src.mesh.simplex_mesh import (
    ExplicitSplit,
    barycentric_coordinates,
    build_macro_mesh,
    face_geometry,
    refine,
    shape_report,
)


class TestBuildMacroMesh:
    """Validation of cell lists"""

    def test_square_counts(self):
        """Two triangles share one interior facet"""
        mesh = square_mesh(1)
        tables = enumerate_entities(mesh)

        assert mesh.n_vertices == 4
        assert mesh.n_cells == 2
        assert len(mesh.boundary_facets) == 4
        assert tables.n_edges == 5
        assert tables.n_interior_facets == 1
        assert tables.n_interior_vertices == 0

    def test_negative_orientation_is_flipped(self):
        """Clockwise input is reoriented and flagged"""
        mesh = build_macro_mesh([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], [[0, 1, 2]])

        assert mesh.cells[0].orientation_sign == -1
        assert mesh.volume(0) == pytest.approx(0.5)

    def test_repeated_vertex_rejected(self):
        with pytest.raises(DegenerateCell):
            build_macro_mesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 1]])

    def test_zero_volume_rejected(self):
        with pytest.raises(DegenerateCell):
            build_macro_mesh([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]], [[0, 1, 2]])

    def test_wrong_arity_rejected(self):
        with pytest.raises(DimensionMismatch):
            build_macro_mesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1]])

    def test_missing_vertex_rejected(self):
        with pytest.raises(DimensionMismatch):
            build_macro_mesh([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], [[0, 1, 3]])

    def test_hanging_node_rejected(self):
        """A facet split in two on one side only is non-conforming"""
        vertices = [[0.0, 0.0], [2.0, 0.0], [0.0, 2.0], [1.0, 1.0], [2.0, 2.0]]
        cells = [[0, 1, 2], [1, 3, 4], [3, 2, 4]]

        with pytest.raises(NonConforming):
            build_macro_mesh(vertices, cells)

    def test_crowded_facet_rejected(self):
        vertices = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.5], [0.2, -1.0]]
        cells = [[0, 2, 1], [0, 2, 3], [0, 2, 4]]

        with pytest.raises(NonConforming):
            build_macro_mesh(vertices, cells, check_overlaps=False)


class TestBuiltinMeshes:
    """Bundled meshes and refinement families"""

    def test_cube_has_six_tetrahedra_per_subcube(self):
        mesh = cube_mesh(1)
        total = sum(mesh.volume(c) for c in range(mesh.n_cells))

        assert mesh.n_cells == 6
        assert total == pytest.approx(1.0)

    def test_kuhn_cube_facets(self):
        """Two boundary triangles per cube face, six shared around the main diagonal"""
        tables = enumerate_entities(builtin_mesh("cube6", 0))

        assert tables.n_facets == 18
        assert tables.n_interior_facets == 6
        assert len(builtin_mesh("cube6", 0).boundary_facets) == 12

    def test_square_family_halves_mesh_size(self):
        meshes = mesh_family("square2", 3)
        sizes = [m.mesh_size for m in meshes]

        assert sizes[0] / sizes[1] == pytest.approx(2.0)
        assert sizes[1] / sizes[2] == pytest.approx(2.0)

    def test_red_refine_quadruples_cells(self):
        mesh = red_refine(reference_simplex(2))

        assert mesh.n_cells == 4
        assert mesh.n_vertices == 6
        assert sum(mesh.volume(c) for c in range(4)) == pytest.approx(0.5)

    def test_red_refine_is_planar_only(self):
        with pytest.raises(DimensionRule):
            red_refine(reference_simplex(3))

    def test_simplex_d_needs_dimension(self):
        assert builtin_mesh("simplexD", d=4).dim == 4
        with pytest.raises(DimensionRule):
            builtin_mesh("simplexD")

    def test_random_simplex_is_shape_regular(self, rng, settings):
        mesh = random_simplex(rng, 3, settings)
        report = shape_report(refine(mesh))

        assert report.shape[0] <= settings.random_shape_limit

    def test_random_interior_point_is_inside(self, rng):
        points = reference_simplex(3).cell_points(0)
        x = random_interior_point(rng, points)

        assert barycentric_coordinates(points, x).min() > 0.0


class TestRefine:
    """Barycentric refinement"""

    def test_children_partition_cell(self, triangle):
        assert triangle.child_volumes(0).sum() == pytest.approx(0.5)
        assert np.allclose(triangle.split_points[0], [1.0 / 3.0, 1.0 / 3.0])

    def test_child_i_omits_macro_vertex_i(self, tetrahedron):
        split_id = tetrahedron.split_vertex_id(0)
        for i, child in enumerate(tetrahedron.children[0]):
            assert child.vertex_ids[0] == split_id
            assert i not in child.vertex_ids

    def test_explicit_split_outside(self):
        with pytest.raises(SplitPointOutside):
            refine(reference_simplex(2), ExplicitSplit(np.array([[2.0, 2.0]])))

    def test_explicit_split_on_boundary(self):
        with pytest.raises(SplitPointOnBoundary):
            refine(reference_simplex(2), ExplicitSplit(np.array([[0.5, 0.0]])))

    def test_as_mesh_is_conforming(self, square):
        fine = square.as_mesh()
        tables = enumerate_entities(fine)

        assert fine.n_cells == 6
        assert tables.n_interior_vertices == 2

    def test_face_geometry_height(self, triangle):
        """Height of the barycenter over a facet is a third of the altitude"""
        geometry = face_geometry(triangle, 0, 0)

        assert geometry.measure == pytest.approx(np.sqrt(2.0))
        assert geometry.height == pytest.approx(np.sqrt(2.0) / 6.0)
        assert np.allclose(geometry.normal, [np.sqrt(0.5), np.sqrt(0.5)])

    def test_shape_report_flags_thin_children(self, settings):
        split = np.array([[0.998, 0.001]])
        refined = refine(reference_simplex(2), ExplicitSplit(split), settings, warn=False)
        report = shape_report(refined, settings)

        assert report.flagged == (0,)
        assert report.to_dict()["flagged"] == [0]


class TestEntities:
    """Global numbering and facet orientation"""

    def test_facet_sign_is_antisymmetric(self):
        mesh = square_mesh(1)
        tables = enumerate_entities(mesh)
        (facet,) = tables.interior_facets
        a, b = tables.facet_cells[tables.facet_index[facet]]

        assert tables.facet_sign(a, facet) == -tables.facet_sign(b, facet)

    def test_canonical_normal_points_out_of_owner(self):
        mesh = square_mesh(1)
        tables = enumerate_entities(mesh)
        (facet,) = tables.interior_facets
        owner = min(tables.facet_cells[tables.facet_index[facet]])
        normal = canonical_normal(mesh, tables, facet)
        centroid = mesh.cell_points(owner).mean(axis=0)
        midpoint = mesh.vertices[list(facet)].mean(axis=0)

        assert np.linalg.norm(normal) == pytest.approx(1.0)
        assert normal @ (midpoint - centroid) > 0.0


class TestMeshIO:
    """ASCII mesh files"""

    def test_write_then_read(self, tmp_path):
        path = tmp_path / "square.mesh"
        write_mesh(path, square_mesh(2))
        mesh = read_mesh(path)

        assert mesh.n_cells == 8
        assert mesh.n_vertices == 9

    def test_write_refined_children(self, tmp_path, square):
        path = tmp_path / "refined.mesh"
        write_mesh(path, square)

        assert read_mesh(path).n_cells == 6

    def test_truncated_file(self):
        with pytest.raises(MeshFormatError):
            parse_mesh("dim 2\nvertices 3\n0 0\n1 0\n")

    def test_bad_header(self):
        with pytest.raises(MeshFormatError):
            parse_mesh("dimension 2\nvertices 0\ncells 0\n")

    def test_split_points_shape(self, tmp_path):
        path = tmp_path / "points.txt"
        path.write_text("0.2 0.3\n0.5 0.1\n")

        assert read_points(path, 2).shape == (2, 2)
        with pytest.raises(MeshFormatError):
            read_points(path, 3)
