"""Tests for manufactured cases, the Stokes solve and convergence studies"""

import numpy as np
import pytest
import sympy

from src.elements.bubbles import BubbleCache
from src.errors import DimensionMismatch, MeshMismatch, TooFewLevels, UnsupportedKind
from src.mesh.builtin import builtin_mesh
from src.mesh.simplex_mesh import refine
from src.spaces.catalog import build_pair
from src.stokes.manufactured import CASE_NAMES, manufactured_case, stream_case
from src.stokes.problem import (
    ERROR_NAMES,
    ConvergenceRow,
    convergence_study,
    observed_rates,
    sample_solution,
    solve_stokes,
)


@pytest.fixture(scope="module")
def square_level1():
    return refine(builtin_mesh("square2", 1))


@pytest.fixture(scope="module")
def cache(square_level1):
    return BubbleCache(square_level1)


class TestManufacturedCase:
    """Exact solutions on the unit box"""

    @pytest.mark.parametrize("d", [2, 3])
    def test_stream_is_divergence_free(self, d):
        assert stream_case(d).divergence_expr == 0

    def test_stream_vanishes_on_boundary(self):
        case = stream_case(2)
        t = np.linspace(0.0, 1.0, 7)
        boundary = np.vstack(
            [
                np.column_stack([t, np.zeros_like(t)]),
                np.column_stack([t, np.ones_like(t)]),
                np.column_stack([np.zeros_like(t), t]),
                np.column_stack([np.ones_like(t), t]),
            ]
        )

        assert np.max(np.abs(case.velocity(boundary))) < 1e-15

    def test_pressure_has_zero_mean(self):
        case = manufactured_case("stream-shifted", 2)
        x, y = case.symbols

        assert sympy.integrate(case.pressure_expr, (x, 0, 1), (y, 0, 1)) == 0
        assert case.name == "stream+dp"

    def test_zero_case_broadcasts(self):
        case = manufactured_case("zero", 3)
        points = np.random.default_rng(0).random((5, 3))

        assert case.velocity(points).shape == (5, 3)
        assert case.velocity_gradient(points).shape == (5, 3, 3)
        assert np.all(case.pressure(points) == 0.0)
        assert np.all(case.forcing(points) == 0.0)

    def test_forcing_includes_pressure_gradient(self):
        shifted = manufactured_case("stream", 2, pressure_shift=10.0)
        plain = manufactured_case("stream", 2)
        points = np.array([[0.3, 0.6], [0.1, 0.9]])

        assert np.allclose(shifted.forcing(points) - plain.forcing(points), [[10.0, 0.0], [10.0, 0.0]])

    def test_translation(self):
        case = stream_case(2)
        moved = case.translated([2.0, -1.0])
        point = np.array([[0.25, 0.4]])

        assert np.allclose(moved.velocity(point + [2.0, -1.0]), case.velocity(point))
        assert moved.origin == (2.0, -1.0)

    def test_translation_dimension(self):
        with pytest.raises(DimensionMismatch):
            stream_case(2).translated([1.0])

    def test_unknown_names(self):
        assert set(CASE_NAMES) == {"zero", "stream", "stream-shifted"}
        with pytest.raises(UnsupportedKind):
            manufactured_case("poiseuille", 2)
        with pytest.raises(DimensionMismatch):
            stream_case(4)


class TestSolveStokes:
    """Saddle point solve with the mean constraint"""

    def test_divergence_free_pair(self, square_level1, cache):
        pair = build_pair("cor5.2", square_level1, cache=cache)
        solution = solve_stokes(pair, manufactured_case("stream", 2))

        assert solution.divergence_free
        assert solution.energy_residual <= 1e-9
        assert not solution.singular
        assert set(ERROR_NAMES) <= set(solution.to_dict())
        assert all(np.isfinite(value) for value in solution.errors.values())

    def test_zero_case(self, square_level1, cache):
        pair = build_pair("Pk-Pk-1r", square_level1, 2, cache)
        solution = solve_stokes(pair, manufactured_case("zero", 2))

        assert np.max(np.abs(solution.velocity)) < 1e-12
        assert np.max(np.abs(solution.pressure)) < 1e-12
        assert solution.energy_residual == 0.0

    def test_case_dimension_checked(self, square_level1, cache):
        pair = build_pair("cor5.2", square_level1, cache=cache)

        with pytest.raises(MeshMismatch):
            solve_stokes(pair, manufactured_case("stream", 3))

    def test_pressure_robust_velocity(self, square_level1, cache):
        """A gradient added to the forcing leaves the velocity of a divergence-free pair unchanged"""
        pair = build_pair("cor5.2", square_level1, cache=cache)
        plain = solve_stokes(pair, manufactured_case("stream", 2))
        shifted = solve_stokes(pair, manufactured_case("stream-shifted", 2))

        assert np.allclose(plain.velocity, shifted.velocity, atol=1e-8)
        assert shifted.errors["L2u"] == pytest.approx(plain.errors["L2u"], abs=1e-8)

    def test_macro_pressure_pollutes_velocity(self, square_level1, cache):
        pair = build_pair("Pk-P0", square_level1, 2, cache)
        plain = solve_stokes(pair, manufactured_case("stream", 2))
        shifted = solve_stokes(pair, manufactured_case("stream-shifted", 2))

        assert shifted.errors["L2u"] > 10.0 * plain.errors["L2u"]

    def test_sample_solution(self, square_level1, cache):
        pair = build_pair("cor5.2", square_level1, cache=cache)
        solution = solve_stokes(pair, manufactured_case("stream", 2))
        rows = sample_solution(pair, solution, 2)

        assert rows.shape == (8 * 6, 6)
        assert set(np.unique(rows[:, 0])) == set(range(8))


class TestConvergence:
    """Observed rates"""

    def test_rates_from_halving(self):
        rows = [
            ConvergenceRow(level, 0.5**level, 1, 1, 0.0, {name: 4.0**-level for name in ERROR_NAMES}, {})
            for level in range(3)
        ]
        for row in rows:
            row.rates = {name: None for name in ERROR_NAMES}
        observed_rates(rows)

        assert rows[0].rates["L2u"] is None
        assert rows[2].rates["H1u"] == pytest.approx(2.0)
        assert rows[1].to_dict()["rate_L2p"] == pytest.approx(2.0)

    def test_needs_three_levels(self):
        meshes = [builtin_mesh("square2", level) for level in range(2)]

        with pytest.raises(TooFewLevels):
            convergence_study("cor5.2", manufactured_case("stream", 2), meshes)

    @pytest.mark.slow
    def test_scott_vogelius_rates(self):
        meshes = [builtin_mesh("square2", level) for level in (1, 2, 3)]
        rows = convergence_study("Pk-Pk-1r", manufactured_case("stream", 2), meshes, k=2)

        assert len(rows) == 3
        assert 1.6 < rows[-1].rates["H1u"] < 2.6
        assert all(row.divergence_l2 < 1e-9 for row in rows)

    @pytest.mark.slow
    def test_linear_plus_modified_bubbles_rate(self):
        meshes = [builtin_mesh("square2", level) for level in (1, 2, 3)]
        rows = convergence_study("cor5.2", manufactured_case("stream", 2), meshes)

        assert 0.8 < rows[-1].rates["H1u"] < 1.3
        assert all(row.divergence_l2 < 1e-9 for row in rows)

    @pytest.mark.slow
    def test_reduced_space_loses_one_order(self):
        meshes = [builtin_mesh("square2", level) for level in (1, 2, 3)]
        case = manufactured_case("stream", 2)
        full = convergence_study("thm6.6", case, meshes)
        reduced = convergence_study("cor6.8", case, meshes)

        gap = full[-1].rates["H1u"] - reduced[-1].rates["H1u"]
        assert 0.7 < gap < 1.3
