"""Tests for global spaces, assembly and the pair catalog"""

from dataclasses import replace

import numpy as np
import pytest

from src.elements.bubbles import BubbleCache
from src.errors import DimensionRule, MeshMismatch, NonFiniteResidual, UnsupportedKind
from src.mesh.builtin import builtin_mesh
from src.mesh.simplex_mesh import refine
from src.spaces.assembly import (
    assemble,
    assemble_load,
    check_direct_sum,
    divergence_image_check,
    mean_functional,
    velocity_gram,
)
from src.spaces.catalog import PAIRS, build_pair, velocity_degree
from src.spaces.spaces import (
    SpaceKind,
    build_space,
    conformity_residuals,
    direct_sum,
    expected_dimension,
)


@pytest.fixture(scope="module")
def square_level1():
    """square2 at level 1: eight triangles around one interior vertex"""
    return refine(builtin_mesh("square2", 1))


@pytest.fixture(scope="module")
def cache(square_level1):
    return BubbleCache(square_level1)


@pytest.fixture(scope="module")
def cube_level0():
    """cube6 at level 0: six Kuhn tetrahedra"""
    return refine(builtin_mesh("cube6", 0))


@pytest.fixture(scope="module")
def cube_cache(cube_level0):
    return BubbleCache(cube_level0)


class TestDimensions:
    """Global dimensions against entity counts"""

    @pytest.mark.parametrize(
        "kind,k,expected",
        [
            (SpaceKind.BR, 1, 8),
            (SpaceKind.MF, 1, 8),
            (SpaceKind.VDIV, 1, 17),
            (SpaceKind.VH68, 1, 19),
            (SpaceKind.VR, 1, 27),
            (SpaceKind.DG_MACRO, 0, 8),
            (SpaceKind.DG_REFINED, 1, 72),
            (SpaceKind.CG_MACRO, 1, 2),
            (SpaceKind.CG_MACRO, 2, 18),
            (SpaceKind.CG_REFINED, 1, 18),
            (SpaceKind.W_R, 1, 17),
        ],
    )
    def test_square(self, square_level1, cache, kind, k, expected):
        space = build_space(square_level1, kind, k, cache)

        assert space.n_dofs == expected
        assert expected_dimension(square_level1, kind, k) == expected

    def test_vr_entity_tags(self, square_level1, cache):
        counts = build_space(square_level1, SpaceKind.VR, cache=cache).dofmap.entity_counts()

        assert counts == {"v": 2, "dv": 9, "e": 16}

    def test_sum_is_rejected(self, square_level1):
        with pytest.raises(UnsupportedKind):
            build_space(square_level1, SpaceKind.SUM)

    def test_degree_range(self, square_level1):
        with pytest.raises(DimensionRule):
            build_space(square_level1, SpaceKind.CG_REFINED, 0)

    def test_tetrahedron_vr(self, tetrahedron):
        """A single macro cell keeps only the divergence DOFs of V_R"""
        space = build_space(tetrahedron, SpaceKind.VR)

        assert space.n_dofs == expected_dimension(tetrahedron, SpaceKind.VR) == 4


class TestConformity:
    """Interface jumps and boundary traces of global basis fields"""

    @pytest.mark.parametrize("kind", [SpaceKind.MF, SpaceKind.VR, SpaceKind.VDIV, SpaceKind.CG_MACRO])
    def test_continuous_and_zero_on_boundary(self, square_level1, cache, kind):
        space = build_space(square_level1, kind, 1, cache)
        residuals = conformity_residuals(space)

        assert residuals["interface"] < 1e-10
        assert residuals["boundary"] < 1e-10

    def test_vr_divergence_is_continuous(self, square_level1, cache):
        residuals = conformity_residuals(build_space(square_level1, SpaceKind.VR, cache=cache))

        assert residuals["div_interface"] < 1e-10

    def test_w_r_contains_constants(self, square_level1, cache):
        """Hat functions sum to one, so the mean functional sums to the area"""
        space = build_space(square_level1, SpaceKind.W_R, cache=cache)

        assert mean_functional(space).sum() == pytest.approx(1.0)

    def test_permuted_space(self, square_level1, cache):
        space = build_space(square_level1, SpaceKind.MF, cache=cache)
        permutation = np.arange(space.n_dofs)[::-1]
        moved = space.permuted(permutation)

        assert moved.dofmap.keys[0] == space.dofmap.keys[-1]
        assert np.allclose(velocity_gram(moved)[0].toarray(), velocity_gram(space)[0].toarray()[::-1, ::-1])


class TestAssembly:
    """A, B, Mp and Mu"""

    def test_operator_shapes_and_symmetry(self, square_level1, cache):
        pair = build_pair("cor5.2", square_level1, cache=cache)
        operators = assemble(pair.velocity, pair.pressure)
        a = operators.A.toarray()

        assert operators.B.shape == (pair.pressure.n_dofs, pair.velocity.n_dofs)
        assert np.allclose(a, a.T)
        assert np.linalg.eigvalsh(operators.Mp.toarray()).min() > 0.0
        assert set(operators.as_dict()) == {"A", "B", "Mp", "Mu"}

    def test_constant_pressure_is_orthogonal(self, square_level1, cache):
        """int div v = 0 for v vanishing on the boundary"""
        pair = build_pair("cor5.2", square_level1, cache=cache)
        operators = assemble(pair.velocity, pair.pressure)
        ones = np.ones(pair.pressure.n_dofs)

        assert np.max(np.abs(ones @ operators.B.toarray())) < 1e-12

    def test_different_meshes_rejected(self, square_level1, square):
        with pytest.raises(MeshMismatch):
            assemble(build_space(square_level1, SpaceKind.MF), build_space(square, SpaceKind.DG_MACRO, 0))

    def test_load_of_constant_forcing(self, square_level1, cache):
        space = build_space(square_level1, SpaceKind.CG_MACRO, 1, cache)
        load = assemble_load(space, lambda x: np.tile([1.0, 0.0], (x.shape[0], 1)), 2)

        # six triangles of area 1/8 meet at the interior vertex
        assert load[0] == pytest.approx(0.25)
        assert load[1] == pytest.approx(0.0)

    @pytest.mark.parametrize("name", ["cor5.2", "thm4.4", "thm6.6", "lemma6.7", "cor6.8"])
    def test_divergence_lands_in_pressure_space(self, square_level1, cache, name):
        pair = build_pair(name, square_level1, cache=cache)
        operators = assemble(pair.velocity, pair.pressure)

        assert divergence_image_check(operators) < 1e-10

    def test_face_bubbles_are_not_divergence_free(self, square_level1, cache):
        pair = build_pair("br", square_level1, cache=cache)

        assert divergence_image_check(assemble(pair.velocity, pair.pressure)) > 1e-3

    @pytest.mark.parametrize(
        "name,k", [("cor5.2", 1), ("thm6.6", 1), ("lemma6.7", 1), ("cor6.4", 1), ("cor6.4", 2)]
    )
    def test_divergence_image_on_kuhn_cube(self, cube_level0, cube_cache, name, k):
        """Negative quadrature weights must not turn a zero residual into NaN"""
        pair = build_pair(name, cube_level0, k, cube_cache)
        image = divergence_image_check(assemble(pair.velocity, pair.pressure))

        assert np.isfinite(image)
        assert image < 1e-10

    def test_non_finite_residual_raises(self, square_level1, cache):
        pair = build_pair("cor5.2", square_level1, cache=cache)
        operators = assemble(pair.velocity, pair.pressure)
        broken = replace(operators, B=operators.B * np.nan)

        with pytest.raises(NonFiniteResidual):
            divergence_image_check(broken)


class TestCatalog:
    """Pair construction"""

    def test_every_pair_is_listed(self):
        assert set(PAIRS) == {
            "cor5.2",
            "thm4.4",
            "br",
            "Pk-P0",
            "Pk-Pk-1r",
            "cor6.4",
            "thm6.6",
            "lemma6.7",
            "cor6.8",
        }

    def test_direct_sum_dimension(self, square_level1, cache):
        pair = build_pair("cor5.2", square_level1, cache=cache)

        assert pair.velocity.n_dofs == 2 + 8
        assert pair.certified
        assert check_direct_sum(pair.velocity) > 0.0

    def test_direct_sum_keys_are_tagged_by_part(self, square_level1, cache):
        parts = [
            build_space(square_level1, SpaceKind.CG_MACRO, 1, cache),
            build_space(square_level1, SpaceKind.MF, cache=cache),
        ]
        space = direct_sum(parts, "sum")

        assert {key[0] for key in space.dofmap.keys} == {0, 1}

    def test_scott_vogelius_certification(self, square_level1, cache):
        assert build_pair("Pk-Pk-1r", square_level1, 2, cache).certified
        assert not build_pair("Pk-Pk-1r", square_level1, 1, cache).certified

    def test_cor64_degree_range(self, square_level1, cache):
        with pytest.raises(DimensionRule):
            build_pair("cor6.4", square_level1, 2, cache)

    def test_unknown_pair(self, square_level1):
        with pytest.raises(UnsupportedKind):
            build_pair("taylor-hood", square_level1)

    def test_velocity_degree(self):
        assert velocity_degree("cor5.2", 1, 3) == 3
        assert velocity_degree("Pk-Pk-1r", 4, 2) == 4
        assert velocity_degree("thm6.6", 1, 2) == 2
