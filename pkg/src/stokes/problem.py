"""Discrete Stokes solves, error measurement and convergence studies"""

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
import structlog

from src.config.models import Settings, get_settings
from src.elements.bubbles import BubbleCache
from src.errors import MeshMismatch, SingularToTolerance, SolverFailure, TooFewLevels
from src.linalg.dense import least_squares, solve_symmetric_indefinite
from src.mesh.simplex_mesh import MacroMesh, refine
from src.monitoring.metrics import stokes_solves
from src.poly.lagrange import lattice_nodes
from src.poly.quadrature import quadrature
from src.poly.split import evaluate_at_macro_points, lambda_system
from src.spaces.assembly import AssembledOperators, assemble, assemble_load, cell_tables, mean_functional
from src.spaces.catalog import Pair, build_pair
from src.stokes.manufactured import ManufacturedCase

logger = structlog.get_logger()

ERROR_NAMES = ("L2u", "H1u", "L2p")


@dataclass
class StokesSolution:
    """
    Velocity/pressure coefficients of a discrete solve with diagnostics

    ``errors`` holds L2u, H1u (seminorm) and L2p against the exact case.
    ``singular`` marks a saddle system that needed the minimal-norm fallback.
    """

    pair: str
    velocity: np.ndarray
    pressure: np.ndarray
    multiplier: float
    divergence_l2: float
    velocity_h1: float
    energy_residual: float
    errors: Dict[str, float] = field(default_factory=dict)
    singular: bool = False

    @property
    def n_u(self) -> int:
        return int(self.velocity.size)

    @property
    def n_p(self) -> int:
        return int(self.pressure.size)

    @property
    def divergence_free(self) -> bool:
        return self.divergence_l2 <= 1e-10 * max(1.0, self.velocity_h1)

    def to_dict(self) -> Dict[str, object]:
        return {
            "pair": self.pair,
            "n_u": self.n_u,
            "n_p": self.n_p,
            "divergence_l2": self.divergence_l2,
            "velocity_h1": self.velocity_h1,
            "energy_residual": self.energy_residual,
            "multiplier": self.multiplier,
            "singular": self.singular,
            **self.errors,
        }


def saddle_matrix(operators: AssembledOperators, mean_row: np.ndarray) -> scipy.sparse.csr_matrix:
    """[[A, -B^T, 0], [-B, 0, m], [0, m^T, 0]]"""
    m = scipy.sparse.csr_matrix(mean_row.reshape(-1, 1))
    n_u = operators.A.shape[0]
    return scipy.sparse.bmat(
        [
            [operators.A, -operators.B.T, scipy.sparse.csr_matrix((n_u, 1))],
            [-operators.B, None, m],
            [None, m.T, None],
        ],
        format="csr",
    )


def _solve_saddle(matrix: scipy.sparse.csr_matrix, rhs: np.ndarray, settings: Settings) -> tuple:
    """Returns (solution, singular)"""
    if matrix.shape[0] <= settings.dense_limit:
        dense = matrix.toarray()
        try:
            return solve_symmetric_indefinite(dense, rhs), False
        except SingularToTolerance:
            logger.warning("saddle_system_singular", size=matrix.shape[0])
            x = least_squares(dense, rhs)
            if np.linalg.norm(dense @ x - rhs) > 1e-8 * max(1.0, np.linalg.norm(rhs)):
                raise SolverFailure("saddle system is inconsistent")
            return x, True
    x = scipy.sparse.linalg.spsolve(matrix.tocsc(), rhs)
    if not np.all(np.isfinite(x)):
        raise SolverFailure(f"sparse saddle solve failed (size {matrix.shape[0]})")
    return x, False


def _measure(
    pair: Pair, case: ManufacturedCase, u: np.ndarray, p: np.ndarray, settings: Settings
) -> Dict[str, float]:
    velocity, pressure = pair.velocity, pair.pressure
    degree = min(2 * max(velocity.degree, pressure.degree) + 2, settings.quadrature_cap)
    rule = quadrature(velocity.dim, degree, settings)
    systems = {c: lambda_system(velocity.refined, c, exact=False) for c in range(velocity.refined.n_cells)}
    sums = {"L2u": 0.0, "H1u": 0.0, "L2p": 0.0, "div": 0.0, "h1": 0.0}
    for table in cell_tables(velocity, rule, systems):
        coeffs = u[table.gids]
        u_h = np.einsum("pbc,b->pc", table.values, coeffs)
        grad_h = np.einsum("pbcx,b->pcx", table.gradients, coeffs)
        div_h = table.divergence @ coeffs
        sums["L2u"] += table.weights @ np.sum((u_h - case.velocity(table.points)) ** 2, axis=1)
        sums["H1u"] += table.weights @ np.sum(
            (grad_h - case.velocity_gradient(table.points)) ** 2, axis=(1, 2)
        )
        sums["div"] += table.weights @ div_h**2
        sums["h1"] += table.weights @ (np.sum(u_h**2, axis=1) + np.sum(grad_h**2, axis=(1, 2)))
    for table in cell_tables(pressure, rule, systems):
        p_h = table.values[:, :, 0] @ p[table.gids]
        sums["L2p"] += table.weights @ (p_h - case.pressure(table.points)) ** 2
    return {name: math.sqrt(max(value, 0.0)) for name, value in sums.items()}


def solve_stokes(
    pair: Pair,
    case: ManufacturedCase,
    settings: Optional[Settings] = None,
    operators: Optional[AssembledOperators] = None,
) -> StokesSolution:
    """
    Solve -Laplace(u) + grad(p) = f, div u = 0 with u = 0 on the boundary and zero-mean p

    The mean constraint enters through one Lagrange multiplier.

    Raises:
        MeshMismatch: Case dimension differs from the mesh
        SolverFailure: The saddle system cannot be solved
    """
    settings = settings or get_settings()
    if case.d != pair.velocity.dim:
        raise MeshMismatch(f"case is {case.d}-dimensional, mesh is {pair.velocity.dim}-dimensional")
    operators = operators or assemble(pair.velocity, pair.pressure, settings)
    n_u, n_p = pair.velocity.n_dofs, pair.pressure.n_dofs

    load_degree = min(2 * pair.velocity.degree + 4, settings.quadrature_cap)
    rhs = np.concatenate([assemble_load(pair.velocity, case.forcing, load_degree, settings), np.zeros(n_p + 1)])
    mean_row = mean_functional(pair.pressure, settings)
    solution, singular = _solve_saddle(saddle_matrix(operators, mean_row), rhs, settings)
    u, p, multiplier = solution[:n_u], solution[n_u : n_u + n_p], float(solution[-1])

    measured = _measure(pair, case, u, p, settings)
    stiffness = float(u @ (operators.A @ u))
    work = float(rhs[:n_u] @ u) + float(p @ (operators.B @ u))
    scale = max(abs(stiffness), abs(work), 1e-300)
    result = StokesSolution(
        pair=pair.name,
        velocity=u,
        pressure=p,
        multiplier=multiplier,
        divergence_l2=measured["div"],
        velocity_h1=measured["h1"],
        energy_residual=abs(stiffness - work) / scale if stiffness or work else 0.0,
        errors={name: measured[name] for name in ERROR_NAMES},
        singular=singular,
    )
    stokes_solves.labels(pair=pair.name).inc()
    logger.info(
        "stokes_solved",
        pair=pair.name,
        case=case.name,
        n_u=n_u,
        n_p=n_p,
        divergence_l2=result.divergence_l2,
        **result.errors,
    )
    return result


@dataclass
class ConvergenceRow:
    level: int
    h: float
    n_u: int
    n_p: int
    divergence_l2: float
    errors: Dict[str, float]
    rates: Dict[str, Optional[float]]

    def to_dict(self) -> Dict[str, object]:
        row: Dict[str, object] = {
            "level": self.level,
            "h": self.h,
            "n_u": self.n_u,
            "n_p": self.n_p,
            "divergence_l2": self.divergence_l2,
        }
        for name in ERROR_NAMES:
            row[name] = self.errors[name]
            row[f"rate_{name}"] = self.rates[name]
        return row


def observed_rates(rows: List[ConvergenceRow]) -> None:
    """Fill rates from consecutive log ratios (the first row has none)"""
    for previous, current in zip(rows, rows[1:]):
        for name in ERROR_NAMES:
            a, b = previous.errors[name], current.errors[name]
            if a > 0.0 and b > 0.0 and previous.h != current.h:
                current.rates[name] = math.log(a / b) / math.log(previous.h / current.h)


def convergence_study(
    pair_name: str,
    case: ManufacturedCase,
    meshes: List[MacroMesh],
    k: int = 1,
    settings: Optional[Settings] = None,
) -> List[ConvergenceRow]:
    """
    Solve on a sequence of meshes and report errors with observed rates

    Args:
        pair_name: Catalog pair
        case: Manufactured case
        meshes: Macro meshes in refinement order (at least 3)
        k: Pair degree
        settings: Numerical settings

    Returns:
        One row per level; rates are None for the first level

    Raises:
        TooFewLevels: Fewer than three meshes
    """
    settings = settings or get_settings()
    if len(meshes) < 3:
        raise TooFewLevels(f"a convergence study needs at least 3 levels, got {len(meshes)}")
    rows = []
    for level, mesh in enumerate(meshes):
        refined = refine(mesh, settings=settings)
        pair = build_pair(pair_name, refined, k, BubbleCache(refined, settings), settings)
        solution = solve_stokes(pair, case, settings)
        rows.append(
            ConvergenceRow(
                level=level,
                h=mesh.mesh_size,
                n_u=solution.n_u,
                n_p=solution.n_p,
                divergence_l2=solution.divergence_l2,
                errors=dict(solution.errors),
                rates={name: None for name in ERROR_NAMES},
            )
        )
    observed_rates(rows)
    logger.info(
        "convergence_study_finished",
        pair=pair_name,
        k=k,
        levels=len(rows),
        final_rates={name: rows[-1].rates[name] for name in ERROR_NAMES},
    )
    return rows


def sample_solution(pair: Pair, solution: StokesSolution, order: int) -> np.ndarray:
    """
    Velocity and pressure on a barycentric lattice of every macro cell

    Returns:
        Rows (cell, x_1..x_d, u_1..u_d, p)
    """
    refined = pair.velocity.refined
    d = refined.dim
    mu = lattice_nodes(d + 1, order)
    rows = []
    for c in range(refined.n_cells):
        ls = lambda_system(refined, c, exact=False)
        u = evaluate_at_macro_points(pair.velocity.field_on_cell(c, solution.velocity), ls, mu)
        p = evaluate_at_macro_points(pair.pressure.field_on_cell(c, solution.pressure), ls, mu)
        points = mu @ ls.macro_vertices.astype(float)
        rows.append(np.hstack([np.full((mu.shape[0], 1), c), points, u, p]))
    return np.vstack(rows) if rows else np.zeros((0, 2 * d + 2))
