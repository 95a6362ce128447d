"""Shared fixtures: settings, meshes and lambda systems"""

import numpy as np
import pytest

from src.config.models import Settings, get_settings
from src.mesh.builtin import builtin_mesh, reference_simplex
from src.mesh.simplex_mesh import ExplicitSplit, refine
from src.poly.split import lambda_system
from src.utils.rng import make_rng


@pytest.fixture(autouse=True)
def fresh_settings():
    """Drop the cached settings so env overrides in one test do not leak"""
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


@pytest.fixture
def settings():
    return Settings()


@pytest.fixture
def rng():
    return make_rng(1234)


@pytest.fixture
def triangle():
    """Reference triangle split at its barycenter"""
    return refine(reference_simplex(2))


@pytest.fixture
def tetrahedron():
    """Reference tetrahedron split at its barycenter"""
    return refine(reference_simplex(3))


@pytest.fixture
def skew_triangle():
    """A non-reference triangle split at an off-center interior point"""
    mesh = reference_simplex(2).transformed(np.array([[2.0, 0.5], [0.3, 1.5]]), [0.2, -0.1])
    split = mesh.cell_points(0).T @ np.array([0.5, 0.3, 0.2])
    return refine(mesh, ExplicitSplit(split.reshape(1, -1)))


@pytest.fixture
def square():
    """square2 at level 0 (two triangles), barycentric split"""
    return refine(builtin_mesh("square2", 0))


@pytest.fixture
def ls2(triangle):
    return lambda_system(triangle, 0, exact=False)


@pytest.fixture
def ls3(tetrahedron):
    return lambda_system(tetrahedron, 0, exact=False)
