"""Tests for local elements: DOF lists, nodal bases and unisolvence"""

import numpy as np
import pytest

from src.errors import UnsupportedKind
from src.mesh.builtin import random_simplex
from src.mesh.simplex_mesh import refine
from src.poly.split import lambda_system
from src.spaces.local_elements import (
    build_local_element,
    check_unisolvence,
    div_conforming_p2_dimension,
    div_conforming_p2_report,
    dof_matrix,
    local_dofs,
    raw_fields,
    vr_local_dimension,
)


class TestDofCounts:
    """Closed-form local dimensions"""

    def test_vr_tetrahedron(self):
        dofs = local_dofs("VR", 3)
        tags = [dof[0] for dof in dofs]

        assert vr_local_dimension(3) == 38
        assert len(dofs) == 38
        assert (tags.count("v"), tags.count("dv"), tags.count("e"), tags.count("f")) == (12, 4, 18, 4)

    def test_vr_triangle_drops_fluxes(self):
        assert len(local_dofs("VR", 2)) == div_conforming_p2_dimension(2) == vr_local_dimension(2) == 15

    def test_div_conforming_p2(self):
        assert div_conforming_p2_dimension(3) == 34

    def test_unknown_kind(self):
        with pytest.raises(UnsupportedKind):
            local_dofs("RT", 3)


class TestLocalElements:
    """Nodal bases by inversion of the DOF matrix"""

    @pytest.mark.parametrize("kind,size", [("MF", 3), ("VDIV", 6), ("VH68", 12), ("VR", 15)])
    def test_triangle_unisolvent(self, ls2, kind, size):
        report = check_unisolvence(kind, ls2)

        assert report.size == size
        assert report.min_singular >= 1e-10

    def test_vr_tetrahedron(self, ls3):
        report = check_unisolvence("VR", ls3)

        assert report.size == 38
        assert report.min_singular >= 1e-10
        assert set(report.to_dict()) == {"kind", "d", "size", "condition", "min_singular"}

    def test_basis_is_nodal(self, ls2):
        element = build_local_element("VH68", ls2)
        matrix = dof_matrix(element.dofs, element.basis, ls2)

        assert np.allclose(matrix, np.eye(len(element.dofs)), atol=1e-9)

    def test_bubble_fluxes_are_diagonal(self, ls3):
        """Flux of beta_i vanishes through every other macro facet"""
        fields = raw_fields("MF", ls3)
        matrix = dof_matrix(local_dofs("MF", 3), fields, ls3)

        assert np.allclose(matrix - np.diag(np.diag(matrix)), 0.0, atol=1e-12)
        assert np.all(np.diag(matrix) > 0.0)

    def test_face_bubbles_unisolvent(self, ls2):
        assert check_unisolvence("BR", ls2).size == 3

    def test_off_center_split(self, skew_triangle):
        ls = lambda_system(skew_triangle, 0, exact=False)

        assert check_unisolvence("VR", ls).min_singular >= 1e-10

    @pytest.mark.slow
    def test_vr_random_tetrahedra(self, rng, settings):
        for _ in range(5):
            refined = refine(random_simplex(rng, 3, settings))
            ls = lambda_system(refined, 0, exact=False)

            assert check_unisolvence("VR", ls, settings).min_singular >= 1e-10


class TestDivConformingP2:
    """P2 on the split with a continuous divergence"""

    def test_triangle(self, ls2):
        report = div_conforming_p2_report(ls2)

        assert report.dimension == report.expected == 15
        assert report.span_rank == 15
        assert report.span_residual < 1e-10

    @pytest.mark.slow
    def test_tetrahedron(self, ls3):
        report = div_conforming_p2_report(ls3)

        assert report.dimension == report.expected == 34
        assert report.span_rank == 34
        assert report.span_residual < 1e-10
