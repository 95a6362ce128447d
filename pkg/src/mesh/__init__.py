"""Simplicial meshes, entity tables and barycentric refinement"""

from .builtin import (
    BUILTIN_NAMES,
    builtin_mesh,
    cube_mesh,
    mesh_family,
    random_interior_point,
    random_simplex,
    red_refine,
    reference_simplex,
    square_mesh,
)
from .entities import EntityTables, canonical_normal, enumerate_entities
from .io import read_mesh, read_points, write_mesh
from .simplex_mesh import (
    BarycenterSplit,
    ExplicitSplit,
    FaceGeometry,
    MacroMesh,
    RefinedMesh,
    ShapeReport,
    Simplex,
    barycentric_coordinates,
    barycentric_gradients,
    build_macro_mesh,
    face_geometry,
    refine,
    shape_report,
)

__all__ = [
    "BUILTIN_NAMES",
    "BarycenterSplit",
    "EntityTables",
    "ExplicitSplit",
    "FaceGeometry",
    "MacroMesh",
    "RefinedMesh",
    "ShapeReport",
    "Simplex",
    "barycentric_coordinates",
    "barycentric_gradients",
    "build_macro_mesh",
    "builtin_mesh",
    "canonical_normal",
    "cube_mesh",
    "enumerate_entities",
    "face_geometry",
    "mesh_family",
    "random_interior_point",
    "random_simplex",
    "read_mesh",
    "read_points",
    "red_refine",
    "reference_simplex",
    "refine",
    "shape_report",
    "square_mesh",
    "write_mesh",
]
