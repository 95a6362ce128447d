"""Tests for face bubbles, modified bubbles and the psi/theta fields"""

from math import sqrt

import numpy as np
import pytest

from src.elements.bubbles import (
    BubbleCache,
    build_psi,
    build_theta,
    face_bubble,
    face_flux,
    modified_bubble_checks,
    modify_bubble,
)
from src.poly.split import boundary_trace, divergence, evaluate_at_macro_points, lambda_system


class TestFaceBubble:
    """b_i = B_i n_i"""

    def test_flux_formula_triangle(self, ls2):
        """int over the hypotenuse of mu_1 mu_2 is |F| / 6"""
        bubble = face_bubble(ls2, 0)

        assert bubble.flux == pytest.approx(sqrt(2.0) / 6.0)
        assert face_flux(bubble.field, ls2, 0) == pytest.approx(bubble.flux)

    def test_flux_only_through_own_face(self, ls3):
        bubble = face_bubble(ls3, 2)

        for face in (0, 1, 3):
            assert abs(face_flux(bubble.field, ls3, face)) < 1e-14

    def test_face_index_checked(self, ls2):
        with pytest.raises(IndexError):
            face_bubble(ls2, 3)


class TestModifiedBubble:
    """beta_i = b_i - w_i with constant divergence"""

    @pytest.mark.parametrize("i", [0, 1, 2])
    def test_triangle(self, ls2, i):
        mb = modify_bubble(ls2, i)
        checks = modified_bubble_checks(mb, ls2)

        assert mb.div_value == pytest.approx(mb.bubble.flux / 0.5)
        assert checks["trace"] < 1e-12
        assert checks["div_deviation"] < 1e-10
        assert checks["continuity"] < 1e-12
        assert checks["flux"] == pytest.approx(mb.bubble.flux)

    def test_tetrahedron(self, ls3, rng):
        mb = modify_bubble(ls3, 1)
        checks = modified_bubble_checks(mb, ls3, rng, n_points=40)

        assert checks["trace"] < 1e-12
        assert checks["div_deviation"] < 1e-10
        assert mb.stability_ratio > 0.0
        assert set(mb.to_dict()) == {"face", "div_value", "flux", "stability_ratio", "correction_residual"}

    def test_off_center_split(self, skew_triangle):
        ls = lambda_system(skew_triangle, 0, exact=False)
        mb = modify_bubble(ls, 2)

        assert modified_bubble_checks(mb, ls)["div_deviation"] < 1e-10


class TestPsiTheta:
    """Quadratic fields with prescribed divergence"""

    @pytest.mark.parametrize("i", [0, 1, 2, 3])
    def test_psi_divergence_is_lambda(self, ls3, i):
        psi = build_psi(ls3, i)
        deviation = divergence(psi.field, ls3) - ls3.lam(i + 1)

        assert deviation.max_abs() < 1e-12

    @pytest.mark.parametrize("i", [0, 1, 2])
    def test_theta_vanishes_on_boundary(self, ls2, i):
        theta = build_theta(ls2, i)

        assert boundary_trace(theta.field, ls2) < 1e-12

    def test_theta_divergence_at_vertices(self, ls2):
        for i in range(3):
            div = divergence(build_theta(ls2, i).field, ls2)
            values = evaluate_at_macro_points(div, ls2, np.eye(3))[:, 0]

            assert np.allclose(values, np.eye(3)[i], atol=1e-12)


class TestBubbleCache:
    """Per-mesh memoization"""

    def test_hits_and_misses(self, square, settings):
        cache = BubbleCache(square, settings)
        first = cache.modified_bubble(1, 0)
        second = cache.modified_bubble(1, 0)

        assert first is second
        assert cache.stats() == {"entries": 1, "hits": 1, "misses": 1}
        assert cache.lambda_system(1) is cache.lambda_system(1)
