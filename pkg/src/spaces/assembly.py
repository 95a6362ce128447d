"""Quadrature assembly of stiffness, divergence and mass operators"""

import time
from dataclasses import dataclass
from typing import Callable, Dict, Iterator, List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
import structlog

from src.config.models import Settings, get_settings
from src.errors import HypothesisViolated, MeshMismatch, NonFiniteResidual
from src.monitoring.metrics import assembly_latency
from src.poly.bary import monomial_derivative_values, monomial_values
from src.poly.quadrature import QuadratureRule, quadrature
from src.poly.split import LambdaSystem, lambda_system
from src.spaces.spaces import FeSpace

logger = structlog.get_logger()


@dataclass
class CellTable:
    """Basis values and Cartesian gradients of a space at the quadrature points of one child"""

    cell: int
    child: int
    gids: np.ndarray
    weights: np.ndarray
    points: np.ndarray
    values: np.ndarray
    gradients: np.ndarray

    @property
    def divergence(self) -> np.ndarray:
        """(npts, nbasis) for vector spaces"""
        return np.einsum("pbcc->pb", self.gradients)


def _coefficients(space: FeSpace, cell: int, child: int) -> Tuple[np.ndarray, np.ndarray]:
    basis = space.cell_basis[cell]
    gids = np.array([g for g, _ in basis], dtype=int)
    if not basis:
        return gids, np.zeros((0, 0, space.ncomp))
    stacked = np.stack(
        [phi.pieces[child].to_float().elevate(space.degree).coeffs for _, phi in basis], axis=1
    )
    return gids, stacked


def cell_tables(
    space: FeSpace, rule: QuadratureRule, systems: Optional[Dict[int, LambdaSystem]] = None
) -> Iterator[CellTable]:
    """Tables for every (macro cell, child) pair in cell order"""
    refined = space.refined
    n = refined.dim + 1
    values_table = monomial_values(n, space.degree, rule.points)
    deriv_table = monomial_derivative_values(n, space.degree, rule.points)
    for c in range(refined.n_cells):
        ls = systems[c] if systems is not None and c in systems else lambda_system(refined, c, exact=False)
        for i in range(n):
            gids, coeffs = _coefficients(space, c, i)
            if gids.size == 0:
                continue
            values = np.einsum("pN,Nbc->pbc", values_table, coeffs)
            gradients = np.einsum("rpN,Nbc,rx->pbcx", deriv_table, coeffs, ls.child_grads[i].astype(float))
            yield CellTable(
                cell=c,
                child=i,
                gids=gids,
                weights=rule.weights * float(ls.child_volumes[i]),
                points=rule.physical_points(ls.child_vertices[i]),
                values=values,
                gradients=gradients,
            )


@dataclass
class AssembledOperators:
    """
    A: velocity stiffness, Mu: A plus velocity L2 mass, B[q, v] = int q div v, Mp: pressure mass
    """

    A: scipy.sparse.csr_matrix
    B: scipy.sparse.csr_matrix
    Mp: scipy.sparse.csr_matrix
    Mu: scipy.sparse.csr_matrix
    velocity: FeSpace
    pressure: FeSpace

    def as_dict(self) -> Dict[str, scipy.sparse.csr_matrix]:
        return {"A": self.A, "B": self.B, "Mp": self.Mp, "Mu": self.Mu}


class _Triplets:
    def __init__(self, shape: Tuple[int, int]):
        self.shape = shape
        self.rows: List[np.ndarray] = []
        self.cols: List[np.ndarray] = []
        self.vals: List[np.ndarray] = []

    def add(self, rows: np.ndarray, cols: np.ndarray, block: np.ndarray) -> None:
        self.rows.append(np.repeat(rows, cols.size))
        self.cols.append(np.tile(cols, rows.size))
        self.vals.append(block.ravel())

    def matrix(self) -> scipy.sparse.csr_matrix:
        if not self.vals:
            return scipy.sparse.csr_matrix(self.shape)
        return scipy.sparse.coo_matrix(
            (np.concatenate(self.vals), (np.concatenate(self.rows), np.concatenate(self.cols))),
            shape=self.shape,
        ).tocsr()


def _systems(space: FeSpace) -> Dict[int, LambdaSystem]:
    return {c: lambda_system(space.refined, c, exact=False) for c in range(space.refined.n_cells)}


def velocity_gram(space: FeSpace, settings: Optional[Settings] = None) -> Tuple[scipy.sparse.csr_matrix, scipy.sparse.csr_matrix]:
    """Stiffness and H1 Gram matrices of a vector space"""
    settings = settings or get_settings()
    rule = quadrature(space.dim, 2 * space.degree, settings)
    stiff = _Triplets((space.n_dofs, space.n_dofs))
    mass = _Triplets((space.n_dofs, space.n_dofs))
    for table in cell_tables(space, rule, _systems(space)):
        w = table.weights
        stiff.add(table.gids, table.gids, np.einsum("p,pacx,pbcx->ab", w, table.gradients, table.gradients))
        mass.add(table.gids, table.gids, np.einsum("p,pac,pbc->ab", w, table.values, table.values))
    a = stiff.matrix()
    return a, (a + mass.matrix()).tocsr()


def assemble(velocity: FeSpace, pressure: FeSpace, settings: Optional[Settings] = None) -> AssembledOperators:
    """
    Assemble A, B, Mp and Mu for a velocity/pressure pair

    Args:
        velocity: Vector space
        pressure: Scalar space on the same refined mesh
        settings: Numerical settings

    Returns:
        AssembledOperators with B[q, v] = int q div v

    Raises:
        MeshMismatch: The spaces live on different meshes
    """
    settings = settings or get_settings()
    if velocity.refined is not pressure.refined:
        raise MeshMismatch(f"{velocity.label} and {pressure.label} use different refined meshes")
    start = time.perf_counter()
    systems = _systems(velocity)
    rule = quadrature(velocity.dim, 2 * max(velocity.degree, pressure.degree), settings)

    n_u, n_p = velocity.n_dofs, pressure.n_dofs
    stiff = _Triplets((n_u, n_u))
    mass_u = _Triplets((n_u, n_u))
    coupling = _Triplets((n_p, n_u))
    mass_p = _Triplets((n_p, n_p))

    pressure_tables = {(t.cell, t.child): t for t in cell_tables(pressure, rule, systems)}
    for table in cell_tables(velocity, rule, systems):
        w = table.weights
        stiff.add(table.gids, table.gids, np.einsum("p,pacx,pbcx->ab", w, table.gradients, table.gradients))
        mass_u.add(table.gids, table.gids, np.einsum("p,pac,pbc->ab", w, table.values, table.values))
        q = pressure_tables.get((table.cell, table.child))
        if q is not None:
            coupling.add(q.gids, table.gids, np.einsum("p,pq,pv->qv", w, q.values[:, :, 0], table.divergence))
    for q in pressure_tables.values():
        mass_p.add(q.gids, q.gids, np.einsum("p,pa,pb->ab", q.weights, q.values[:, :, 0], q.values[:, :, 0]))

    a = stiff.matrix()
    operators = AssembledOperators(
        A=a,
        B=coupling.matrix(),
        Mp=mass_p.matrix(),
        Mu=(a + mass_u.matrix()).tocsr(),
        velocity=velocity,
        pressure=pressure,
    )
    elapsed = time.perf_counter() - start
    assembly_latency.labels(velocity_kind=velocity.kind.value, pressure_kind=pressure.kind.value).observe(elapsed)
    logger.info(
        "operators_assembled",
        velocity=velocity.label,
        pressure=pressure.label,
        n_u=n_u,
        n_p=n_p,
        seconds=round(elapsed, 3),
    )
    return operators


def assemble_load(
    space: FeSpace, forcing: Callable[[np.ndarray], np.ndarray], degree: int, settings: Optional[Settings] = None
) -> np.ndarray:
    """F[g] = int f . phi_g with f evaluated at physical points (npts, d) -> (npts, d)"""
    settings = settings or get_settings()
    rule = quadrature(space.dim, degree, settings)
    out = np.zeros(space.n_dofs)
    for table in cell_tables(space, rule, _systems(space)):
        f = np.asarray(forcing(table.points), dtype=float).reshape(table.points.shape[0], space.ncomp)
        np.add.at(out, table.gids, np.einsum("p,pc,pbc->b", table.weights, f, table.values))
    return out


def check_direct_sum(space: FeSpace, settings: Optional[Settings] = None) -> float:
    """
    Cholesky test of the H1 Gram matrix of a sum of spaces

    Returns:
        Smallest eigenvalue of the Gram matrix relative to the largest

    Raises:
        HypothesisViolated: The union of bases is linearly dependent
    """
    _, gram = velocity_gram(space, settings)
    dense = gram.toarray()
    if dense.size == 0:
        return 1.0
    eigenvalues = scipy.linalg.eigvalsh(dense)
    ratio = float(eigenvalues[0] / eigenvalues[-1]) if eigenvalues[-1] > 0 else 0.0
    try:
        scipy.linalg.cholesky(dense)
    except np.linalg.LinAlgError as e:
        raise HypothesisViolated(f"{space.label} is not a direct sum") from e
    if ratio < 1e-13:
        raise HypothesisViolated(f"{space.label} is numerically dependent (ratio {ratio:.3e})")
    return ratio


def divergence_image_check(operators: AssembledOperators, settings: Optional[Settings] = None) -> float:
    """
    Largest relative L2 distance of div phi from the pressure space over all velocity basis fields

    The projection Pi div phi uses X = Mp^-1 B; the residual div phi - Pi div phi
    is integrated directly at the quadrature points.

    Raises:
        NonFiniteResidual: A residual is NaN or infinite
    """
    settings = settings or get_settings()
    velocity, pressure = operators.velocity, operators.pressure
    if velocity.n_dofs == 0:
        return 0.0
    solver = scipy.sparse.linalg.splu(operators.Mp.tocsc())
    projection = solver.solve(operators.B.toarray())
    rule = quadrature(velocity.dim, 2 * max(velocity.degree, pressure.degree), settings)
    systems = _systems(velocity)
    pressure_tables = {(t.cell, t.child): t for t in cell_tables(pressure, rule, systems)}
    residual = np.zeros(velocity.n_dofs)
    norm = np.zeros(velocity.n_dofs)
    for table in cell_tables(velocity, rule, systems):
        div = table.divergence
        q = pressure_tables.get((table.cell, table.child))
        projected = np.zeros_like(div)
        if q is not None:
            projected = q.values[:, :, 0] @ projection[np.ix_(q.gids, table.gids)]
        np.add.at(residual, table.gids, table.weights @ (div - projected) ** 2)
        np.add.at(norm, table.gids, table.weights @ div**2)
    # Grundmann-Moller weights can be negative; a zero residual may integrate to -eps
    residual = np.maximum(residual, 0.0)
    norm = np.maximum(norm, 0.0)
    relative = np.sqrt(residual) / np.where(norm > 0.0, np.sqrt(norm), 1.0)
    if not np.all(np.isfinite(relative)):
        raise NonFiniteResidual(f"divergence image of {velocity.label} in {pressure.label} is not finite")
    worst = float(np.max(relative))
    logger.info("divergence_image_checked", velocity=velocity.label, pressure=pressure.label, residual=worst)
    return worst


def mean_functional(space: FeSpace, settings: Optional[Settings] = None) -> np.ndarray:
    """m[g] = int phi_g over the domain (scalar spaces)"""
    return assemble_load(space, lambda x: np.ones(x.shape[0]), max(space.degree, 1), settings)
