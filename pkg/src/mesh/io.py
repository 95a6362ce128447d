"""Plain ASCII mesh files: ``dim d``, ``vertices n`` + rows, ``cells m`` + rows"""

from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
import structlog

from src.errors import MeshFormatError
from src.mesh.simplex_mesh import MacroMesh, RefinedMesh, build_macro_mesh

logger = structlog.get_logger()

PathLike = Union[str, Path]


def _header(line: str, keyword: str) -> int:
    parts = line.split()
    if len(parts) != 2 or parts[0] != keyword:
        raise MeshFormatError(f"expected '{keyword} <int>', got {line!r}")
    try:
        return int(parts[1])
    except ValueError as e:
        raise MeshFormatError(f"invalid count in {line!r}") from e


def parse_mesh(text: str) -> Tuple[np.ndarray, List[List[int]]]:
    """Parse mesh text into vertex coordinates and cell vertex ids"""
    lines = [line.strip() for line in text.splitlines() if line.strip() and not line.startswith("#")]
    if len(lines) < 3:
        raise MeshFormatError("mesh file is truncated")
    d = _header(lines[0], "dim")
    n = _header(lines[1], "vertices")
    if len(lines) < 2 + n + 1:
        raise MeshFormatError("vertex block is truncated")
    try:
        vertices = np.array([[float(x) for x in lines[2 + r].split()] for r in range(n)])
    except ValueError as e:
        raise MeshFormatError("non-numeric vertex coordinate") from e
    if vertices.shape != (n, d):
        raise MeshFormatError(f"vertex block must have {n} rows of {d} reals")
    m = _header(lines[2 + n], "cells")
    cell_lines = lines[3 + n : 3 + n + m]
    if len(cell_lines) != m:
        raise MeshFormatError("cell block is truncated")
    try:
        cells = [[int(v) for v in line.split()] for line in cell_lines]
    except ValueError as e:
        raise MeshFormatError("non-integer vertex id") from e
    if any(len(cell) != d + 1 for cell in cells):
        raise MeshFormatError(f"every cell must list {d + 1} vertex ids")
    return vertices, cells


def read_mesh(path: PathLike) -> MacroMesh:
    """Read and validate a mesh file"""
    vertices, cells = parse_mesh(Path(path).read_text())
    mesh = build_macro_mesh(vertices, cells)
    logger.info("mesh_read", path=str(path), dim=mesh.dim, cells=mesh.n_cells)
    return mesh


def format_mesh(vertices: np.ndarray, cells: Sequence[Sequence[int]]) -> str:
    """Render vertices and cells in the ASCII mesh format"""
    lines = [f"dim {vertices.shape[1]}", f"vertices {vertices.shape[0]}"]
    lines.extend(" ".join(repr(float(x)) for x in row) for row in vertices)
    lines.append(f"cells {len(cells)}")
    lines.extend(" ".join(str(int(v)) for v in cell) for cell in cells)
    return "\n".join(lines) + "\n"


def write_mesh(path: PathLike, mesh: Union[MacroMesh, RefinedMesh]) -> None:
    """Write a macro mesh, or the children of a refined mesh, to a file"""
    if isinstance(mesh, RefinedMesh):
        vertices = mesh.vertices
        cells = [child.vertex_ids for children in mesh.children for child in children]
    else:
        vertices = mesh.vertices
        cells = [cell.vertex_ids for cell in mesh.cells]
    Path(path).write_text(format_mesh(vertices, cells))
    logger.info("mesh_written", path=str(path), cells=len(cells))


def read_points(path: PathLike, d: int) -> np.ndarray:
    """Read split points, one row of d reals per macro cell"""
    try:
        rows = [
            [float(x) for x in line.split()]
            for line in Path(path).read_text().splitlines()
            if line.strip() and not line.startswith("#")
        ]
    except ValueError as e:
        raise MeshFormatError("non-numeric split point coordinate") from e
    points = np.array(rows)
    if points.ndim != 2 or points.shape[1] != d:
        raise MeshFormatError(f"split points must be rows of {d} reals")
    return points
