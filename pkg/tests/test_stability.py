"""Tests for inf-sup constants, bootstrap and equivalence witnesses and divergence surjectivity"""

import math

import numpy as np
import pytest

from src.elements.bubbles import BubbleCache
from src.errors import HypothesisViolated, MeanNotZero
from src.mesh.builtin import builtin_mesh
from src.mesh.simplex_mesh import build_macro_mesh, refine
from src.spaces.assembly import mean_functional
from src.spaces.catalog import build_pair
from src.spaces.spaces import SpaceKind, build_space
from src.stability.lab import (
    bootstrap_check,
    equivalence_check,
    infsup_constant,
    infsup_for_spaces,
    local_infsup_constant,
    refinement_sweep,
    surjectivity_solve,
)


@pytest.fixture(scope="module")
def square_level1():
    return refine(builtin_mesh("square2", 1))


@pytest.fixture(scope="module")
def cache(square_level1):
    return BubbleCache(square_level1)


def _single_cell(points):
    return refine(build_macro_mesh(np.asarray(points, dtype=float), [[0, 1, 2]]))


class TestInfSup:
    """beta_h from the deflated pressure Schur complement"""

    def test_certified_pair(self, square_level1, cache):
        report = infsup_constant(build_pair("cor5.2", square_level1, cache=cache), level=1)

        assert report.beta_h >= 1e-6
        assert report.stable
        assert report.to_dict()["label"] == "stable"
        assert (report.n_u, report.n_p) == (10, 8)

    def test_locked_pair(self, square_level1, cache):
        """Two velocity DOFs cannot control seven zero-mean pressures"""
        report = infsup_constant(build_pair("Pk-P0", square_level1, 1, cache))

        assert report.beta_h == 0.0
        assert report.to_dict()["label"] == "locked"

    def test_permutation_invariance(self, square_level1, cache):
        velocity = build_space(square_level1, SpaceKind.CG_MACRO, 2, cache)
        pressure = build_space(square_level1, SpaceKind.DG_MACRO, 0, cache)
        permutation = np.random.default_rng(3).permutation(velocity.n_dofs)

        assert infsup_for_spaces(velocity.permuted(permutation), pressure) == pytest.approx(
            infsup_for_spaces(velocity, pressure), rel=1e-9
        )

    def test_rigid_motion_invariance(self):
        points = np.array([[0.0, 0.0], [1.0, 0.0], [0.3, 0.8]])
        angle = 0.7
        rotation = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
        moved = points @ rotation.T + [3.0, -2.0]

        assert local_infsup_constant(_single_cell(moved), 0, 1) == pytest.approx(
            local_infsup_constant(_single_cell(points), 0, 1), rel=1e-9
        )

    def test_sweep_ratio(self):
        assert refinement_sweep([0.4, 0.2, math.inf]) == pytest.approx(0.5)
        assert refinement_sweep([]) == 0.0
        assert refinement_sweep([0.0, 0.0]) == 0.0

    @pytest.mark.slow
    def test_mesh_robustness(self):
        betas = []
        for level in (1, 2, 3):
            refined = refine(builtin_mesh("square2", level))
            betas.append(infsup_constant(build_pair("cor5.2", refined), level).beta_h)

        assert min(betas) >= 1e-6
        assert refinement_sweep(betas) >= 0.5


CERTIFIED_2D = [("cor5.2", 1), ("Pk-Pk-1r", 2), ("cor6.4", 1), ("thm6.6", 1), ("cor6.8", 1)]
CERTIFIED_3D = [("cor5.2", 1), ("Pk-Pk-1r", 3), ("cor6.4", 1), ("cor6.4", 2), ("thm6.6", 1), ("cor6.8", 1)]


@pytest.mark.slow
class TestRefinementSweep:
    """Every certified pair stays stable on the bundled meshes"""

    @pytest.mark.parametrize("name,k", CERTIFIED_2D)
    @pytest.mark.parametrize("mesh,levels", [("tri1", (1, 2)), ("square2", (1, 2)), ("squareN", (0, 1))])
    def test_triangles(self, name, k, mesh, levels):
        betas = []
        for level in levels:
            pair = build_pair(name, refine(builtin_mesh(mesh, level)), k)
            assert pair.certified
            report = infsup_constant(pair, level)
            assert report.stable, (mesh, level, report.beta_h)
            betas.append(report.beta_h)

        assert refinement_sweep(betas) >= 0.25

    @pytest.mark.parametrize("name,k", CERTIFIED_3D)
    @pytest.mark.parametrize("mesh", ["tet1", "cube6"])
    def test_tetrahedra(self, name, k, mesh):
        pair = build_pair(name, refine(builtin_mesh(mesh, 0)), k)
        report = infsup_constant(pair)

        assert pair.certified
        assert report.stable, (mesh, report.beta_h)

    def test_linear_plus_modified_bubbles_on_cube_family(self):
        reports = [
            infsup_constant(build_pair("cor5.2", refine(builtin_mesh(mesh, level))), level)
            for mesh, level in [("cube6", 0), ("cubeN", 0)]
        ]

        assert all(report.stable for report in reports)
        assert refinement_sweep([report.beta_h for report in reports]) >= 0.25


class TestLocalInfSup:
    """Inf-sup constant on one refined macro cell"""

    @pytest.mark.parametrize("k", [1, 2])
    def test_reference_triangle(self, triangle, k):
        assert local_infsup_constant(triangle, 0, k) > 0.0

    def test_flat_cell_is_worse(self):
        equilateral = _single_cell([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 2.0]])
        flat = _single_cell([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3.0) / 20.0]])
        beta_flat = local_infsup_constant(flat, 0, 1)

        assert 0.0 < beta_flat < local_infsup_constant(equilateral, 0, 1)


class TestBootstrap:
    """V_h against macro P0 and against refined P_{k-1}"""

    def test_lagrange_plus_bubbles(self, square_level1, cache):
        pair = build_pair("cor6.4", square_level1, 1, cache)
        report = bootstrap_check(pair.velocity, 1, cache)

        assert report.beta_macro > report.threshold
        assert report.beta_refined > report.threshold
        assert report.to_dict()["consistent"]

    def test_missing_lagrange_space(self, square_level1, cache):
        with pytest.raises(HypothesisViolated):
            bootstrap_check(build_space(square_level1, SpaceKind.MF, cache=cache), 1, cache)


class TestEquivalence:
    """Refined P_k - P_{k-1} is stable exactly when macro P_k - P0 is"""

    def test_both_stable(self, square_level1, cache):
        report = equivalence_check(square_level1, 2, cache)

        assert report.beta_refined > report.threshold
        assert report.beta_macro > report.threshold
        assert report.consistent

    def test_both_locked(self, square_level1, cache):
        report = equivalence_check(square_level1, 1, cache)
        row = report.to_dict()

        assert report.consistent
        assert (row["label_refined"], row["label_macro"]) == ("locked", "locked")

    def test_single_cell(self, triangle):
        """One macro cell leaves no zero-mean P0 pressure, so the macro pair is vacuously stable"""
        report = equivalence_check(triangle, 1)

        assert report.beta_macro == math.inf
        assert report.beta_refined > report.threshold
        assert report.consistent

    def test_empty_velocity_counts_as_locked(self, square):
        """square2 at level 0 has no interior vertex"""
        report = equivalence_check(square, 1)

        assert report.beta_macro == 0.0
        assert report.consistent


class TestSurjectivity:
    """Velocity with a prescribed divergence"""

    def test_zero_pressure(self, square_level1, cache):
        pair = build_pair("cor5.2", square_level1, cache=cache)
        result = surjectivity_solve(pair, np.zeros(pair.pressure.n_dofs))

        assert np.all(result.velocity == 0.0)
        assert result.to_dict() == {"l2_residual": 0.0, "vertex_residual": 0.0}

    def test_cell_constant_pressure(self, square_level1, cache):
        pair = build_pair("thm4.4", square_level1, cache=cache)
        pressure = np.array([1.0, -1.0] * 4)

        assert surjectivity_solve(pair, pressure).l2_residual < 1e-10

    def test_vertex_values_match(self, square_level1, cache, rng):
        pair = build_pair("lemma6.7", square_level1, cache=cache)
        mean_row = mean_functional(pair.pressure)
        pressure = rng.standard_normal(pair.pressure.n_dofs)
        pressure -= (mean_row @ pressure) / mean_row.sum()
        result = surjectivity_solve(pair, pressure)

        assert result.l2_residual < 1e-10
        assert result.vertex_residual < 1e-10

    def test_mean_checked(self, square_level1, cache):
        pair = build_pair("cor5.2", square_level1, cache=cache)

        with pytest.raises(MeanNotZero):
            surjectivity_solve(pair, np.ones(pair.pressure.n_dofs))
