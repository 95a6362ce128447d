"""Bundled meshes, uniform refinement families and random simplices"""

from itertools import permutations
from typing import Dict, List, Optional, Tuple

import numpy as np
import structlog

from src.config.models import Settings, get_settings
from src.errors import DimensionRule, UnsupportedKind
from src.mesh.simplex_mesh import MacroMesh, build_macro_mesh, shape_constant

logger = structlog.get_logger()


def reference_simplex(d: int) -> MacroMesh:
    """Unit reference d-simplex {x >= 0, sum x <= 1}"""
    vertices = np.vstack([np.zeros(d), np.eye(d)])
    return build_macro_mesh(vertices, [list(range(d + 1))], check_overlaps=False)


def square_mesh(n: int) -> MacroMesh:
    """Unit square on an n x n grid, every square cut along its SW-NE diagonal"""
    xs = np.linspace(0.0, 1.0, n + 1)
    vertices = np.array([(x, y) for y in xs for x in xs])
    cells = []
    for j in range(n):
        for i in range(n):
            v00 = j * (n + 1) + i
            v10, v01, v11 = v00 + 1, v00 + n + 1, v00 + n + 2
            cells.append([v00, v10, v11])
            cells.append([v00, v11, v01])
    return build_macro_mesh(vertices, cells, check_overlaps=False)


def cube_mesh(n: int) -> MacroMesh:
    """Unit cube on an n x n x n grid, each subcube split into 6 Kuhn tetrahedra"""
    xs = np.linspace(0.0, 1.0, n + 1)
    vertices = np.array([(x, y, z) for z in xs for y in xs for x in xs])

    def vid(i: int, j: int, k: int) -> int:
        return (k * (n + 1) + j) * (n + 1) + i

    cells = []
    for k in range(n):
        for j in range(n):
            for i in range(n):
                for perm in permutations(range(3)):
                    corner = [i, j, k]
                    path = [vid(*corner)]
                    for axis in perm:
                        corner[axis] += 1
                        path.append(vid(*corner))
                    cells.append(path)
    return build_macro_mesh(vertices, cells, check_overlaps=False)


def red_refine(mesh: MacroMesh) -> MacroMesh:
    """Uniform red refinement of a triangle mesh (each triangle into four)"""
    if mesh.dim != 2:
        raise DimensionRule("red refinement is implemented for triangle meshes only")
    vertices = [tuple(v) for v in mesh.vertices]
    midpoints: Dict[Tuple[int, int], int] = {}

    def midpoint(a: int, b: int) -> int:
        key = (min(a, b), max(a, b))
        if key not in midpoints:
            midpoints[key] = len(vertices)
            vertices.append(tuple((mesh.vertices[a] + mesh.vertices[b]) / 2))
        return midpoints[key]

    cells = []
    for cell in mesh.cells:
        a, b, c = cell.vertex_ids
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        cells.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]])
    return build_macro_mesh(np.array(vertices), cells, check_overlaps=False)


BUILTIN_NAMES = ("tri1", "square2", "squareN", "tet1", "cube6", "cubeN", "simplexD")


def builtin_mesh(name: str, level: int = 0, d: Optional[int] = None) -> MacroMesh:
    """
    Bundled mesh at a uniform refinement level

    Level L of ``square2``/``cube6`` has grid size 2^L, of ``squareN``/``cubeN``
    2^(L+1); ``tri1`` is red-refined L times. ``tet1`` and ``simplexD`` only
    exist at level 0.

    Args:
        name: One of BUILTIN_NAMES
        level: Uniform refinement level
        d: Dimension for ``simplexD``

    Returns:
        MacroMesh
    """
    if name == "square2":
        return square_mesh(2**level)
    if name == "squareN":
        return square_mesh(2 ** (level + 1))
    if name == "cube6":
        return cube_mesh(2**level)
    if name == "cubeN":
        return cube_mesh(2 ** (level + 1))
    if name == "tri1":
        mesh = reference_simplex(2)
        for _ in range(level):
            mesh = red_refine(mesh)
        return mesh
    if name in ("tet1", "simplexD"):
        dim = 3 if name == "tet1" else d
        if dim is None or dim < 1:
            raise DimensionRule("simplexD requires a dimension")
        if level > 0:
            raise DimensionRule(f"{name} has no uniform refinement family")
        return reference_simplex(dim)
    raise UnsupportedKind(f"unknown builtin mesh: {name}")


def random_simplex(
    rng: np.random.Generator,
    d: int,
    settings: Optional[Settings] = None,
    amplitude: float = 0.3,
    max_tries: int = 1000,
) -> MacroMesh:
    """
    Random shape-regular simplex: a perturbed reference simplex

    Draws are rejected while the shape constant exceeds the configured limit.
    """
    settings = settings or get_settings()
    base = np.vstack([np.zeros(d), np.eye(d)])
    for _ in range(max_tries):
        points = base + rng.uniform(-amplitude, amplitude, size=base.shape)
        if abs(np.linalg.det(points[1:] - points[0])) < 1e-8:
            continue
        if shape_constant(points) <= settings.random_shape_limit:
            return build_macro_mesh(points, [list(range(d + 1))], check_overlaps=False)
    raise DimensionRule(f"no shape-regular simplex found in {max_tries} draws")


def random_interior_point(rng: np.random.Generator, points: np.ndarray, margin: float = 0.05) -> np.ndarray:
    """Random point with all barycentric coordinates above ``margin``"""
    n = points.shape[0]
    weights = rng.dirichlet(np.ones(n))
    weights = margin + (1.0 - n * margin) * weights
    return weights @ points


def mesh_family(name: str, levels: int, d: Optional[int] = None) -> List[MacroMesh]:
    """Meshes at levels 0..levels-1"""
    return [builtin_mesh(name, level, d) for level in range(levels)]
