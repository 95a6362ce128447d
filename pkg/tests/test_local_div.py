"""Tests for the local divergence right inverse on one barycentric split"""

import numpy as np
import pytest

from src.errors import DegreeMismatch, DegreeTooHigh, MeanNotZero
from src.mesh.builtin import reference_simplex
from src.mesh.simplex_mesh import refine
from src.poly.bary import BaryPoly
from src.poly.split import (
    Continuity,
    SplitPiecewisePoly,
    boundary_trace,
    continuity_residual,
    divergence,
    l2_norm,
    lambda_system,
)
from src.solvers.local_div import (
    constant_field,
    decompose,
    final_correction,
    norm_equivalence_ratio,
    random_pressure,
    solve_local_div,
)


def _assert_valid(report, p, ls, tol=1e-10):
    assert report.residual_norm <= tol * max(1.0, l2_norm(p, ls))
    assert boundary_trace(report.v, ls) <= 1e-12
    assert continuity_residual(report.v, ls) <= 1e-12
    assert report.v.degree <= report.k


class TestLayerDecomposition:
    """lambda_0 layers of a piecewise polynomial"""

    def test_reconstruct(self, ls3, rng):
        p = random_pressure(ls3, 2, rng)
        back = decompose(p, ls3).reconstruct(ls3.cell)
        points = rng.dirichlet(np.ones(4), size=5)

        for i in range(4):
            assert np.allclose(back.evaluate(i, points), p.evaluate(i, points))

    def test_vector_field_rejected(self, ls2):
        field = SplitPiecewisePoly.stack([ls2.mu(0), ls2.mu(1)])

        with pytest.raises(DegreeMismatch):
            decompose(field, ls2)

    def test_norm_equivalence_is_bounded(self, ls2, rng):
        ratio = norm_equivalence_ratio(ls2, 1, 1, rng)

        assert 0.0 < ratio < 1e4


class TestSolveLocalDiv:
    """div v = p with v continuous and zero on the macro boundary"""

    def test_zero_pressure(self, ls2):
        p = constant_field(ls2, 0.0)
        report = solve_local_div(p, 1, ls2)

        assert report.v.max_abs() == 0.0
        assert report.residual_norm == 0.0

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_triangle(self, ls2, rng, k):
        p = random_pressure(ls2, k - 1, rng)
        report = solve_local_div(p, k, ls2)

        _assert_valid(report, p, ls2)

    @pytest.mark.parametrize("k", [1, 2])
    def test_tetrahedron(self, ls3, rng, k):
        p = random_pressure(ls3, k - 1, rng)
        report = solve_local_div(p, k, ls3)

        _assert_valid(report, p, ls3)
        assert report.first_child_residual <= 1e-10

    @pytest.mark.parametrize("k", [1, 2])
    def test_four_simplex(self, rng, k):
        ls = lambda_system(refine(reference_simplex(4)), 0, exact=False)
        p = random_pressure(ls, k - 1, rng)
        report = solve_local_div(p, k, ls)

        _assert_valid(report, p, ls)
        assert len(report.v.pieces) == 5

    def test_off_center_split(self, skew_triangle, rng):
        ls = lambda_system(skew_triangle, 0, exact=False)
        p = random_pressure(ls, 2, rng)
        report = solve_local_div(p, 3, ls)

        _assert_valid(report, p, ls)
        assert np.isfinite(report.stability_ratio)

    def test_lower_degree_pressure_is_elevated(self, ls2, rng):
        p = random_pressure(ls2, 0, rng)
        report = solve_local_div(p, 3, ls2)

        _assert_valid(report, p, ls2)

    def test_exact_arithmetic_has_zero_residual(self, triangle, rng):
        ls = lambda_system(triangle, 0, exact=True)
        p = random_pressure(ls, 1, rng)
        report = solve_local_div(p, 2, ls)

        assert report.residual_norm == 0.0
        assert report.v.exact

    def test_mean_not_zero(self, ls2):
        with pytest.raises(MeanNotZero):
            solve_local_div(constant_field(ls2, 1.0), 1, ls2)

    def test_degree_mismatch(self, ls2, rng):
        p = random_pressure(ls2, 2, rng)

        with pytest.raises(DegreeMismatch):
            solve_local_div(p, 2, ls2)

    def test_degree_cap(self, ls2, settings):
        p = constant_field(ls2, 0.0)

        with pytest.raises(DegreeTooHigh):
            solve_local_div(p, settings.degree_cap + 1, ls2, settings)

    def test_report_fields(self, ls2, rng):
        report = solve_local_div(random_pressure(ls2, 1, rng), 2, ls2)

        assert set(report.to_dict()) == {
            "k",
            "residual_norm",
            "first_child_residual",
            "stability_ratio",
            "layer_ratio",
        }


class TestFinalCorrection:
    """s lambda_0^k with divergence b lambda_0^(k-1)"""

    def test_child_constant(self, ls3):
        volumes = np.asarray(ls3.child_volumes, dtype=float)
        b = np.array([1.0, -1.0, 2.0, 0.0])
        b[3] = -(b[:3] @ volumes[:3]) / volumes[3]
        correction = final_correction(b, 2, ls3)
        div = divergence(correction.v, ls3)
        target = SplitPiecewisePoly(
            ls3.cell,
            [BaryPoly.monomial(4, (1, 0, 0, 0), b[i]) for i in range(4)],
            Continuity.L2,
        )

        assert (div - target).max_abs() < 1e-12
        assert boundary_trace(correction.v, ls3) == 0.0

    def test_mean_not_zero(self, ls2):
        with pytest.raises(MeanNotZero):
            final_correction(np.array([1.0, 1.0, 1.0]), 1, ls2)
