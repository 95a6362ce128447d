"""Discrete inf-sup constants, bootstrap and equivalence witnesses, divergence surjectivity"""

import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence

import numpy as np
import scipy.sparse.linalg
import structlog

from src.config.models import Settings, get_settings
from src.elements.bubbles import BubbleCache
from src.errors import EmptyVelocitySpace, FluxSystemSingular, HypothesisViolated, MeanNotZero
from src.linalg.dense import generalized_symmetric_eig, least_squares, matrix_rank, null_space, solve_spd
from src.mesh.simplex_mesh import RefinedMesh
from src.monitoring.metrics import assertions_failed
from src.poly.lagrange import lattice_nodes
from src.poly.split import divergence, evaluate_at_macro_points, lambda_system
from src.spaces.assembly import AssembledOperators, assemble, mean_functional
from src.spaces.catalog import Pair
from src.spaces.spaces import FeSpace, SpaceKind, build_space

logger = structlog.get_logger()

# Eigenvalues below this fraction of the largest are roundoff
EIGEN_NOISE = 64 * float(np.finfo(float).eps)


@dataclass
class InfSupReport:
    """beta_h with the space sizes it was computed for"""

    pair: str
    d: int
    k: int
    level: int
    n_u: int
    n_p: int
    beta_h: float
    threshold: float

    @property
    def stable(self) -> bool:
        return self.beta_h > self.threshold

    def to_dict(self) -> Dict[str, object]:
        row = asdict(self)
        row["label"] = "stable" if self.stable else "locked"
        return row


def _beta(operators: AssembledOperators, mean_row: np.ndarray, problem: str) -> float:
    """
    sqrt of the smallest eigenvalue of B Mu^-1 B^T q = lambda Mp q on the zero-mean complement

    The constant pressure mode is removed by restricting to the Mp-orthogonal
    complement of constants, i.e. the kernel of the mean functional.
    """
    if operators.velocity.n_dofs == 0:
        raise EmptyVelocitySpace(f"{operators.velocity.label} has no degrees of freedom")
    b = operators.B.toarray()
    mu = operators.Mu.toarray()
    mp = operators.Mp.toarray()
    deflation = null_space(mean_row.reshape(1, -1))
    if deflation.shape[1] == 0:
        return math.inf
    if operators.velocity.n_dofs < deflation.shape[1]:
        # B^T has a kernel on the zero-mean complement
        return 0.0
    schur = b @ solve_spd(mu, b.T)
    reduced_s = deflation.T @ schur @ deflation
    reduced_m = deflation.T @ mp @ deflation
    values = generalized_symmetric_eig(0.5 * (reduced_s + reduced_s.T), 0.5 * (reduced_m + reduced_m.T), problem)
    floor = EIGEN_NOISE * max(abs(float(values[-1])), 1.0)
    lowest = float(values[0])
    return math.sqrt(lowest) if lowest > floor else 0.0


def infsup_for_spaces(
    velocity: FeSpace,
    pressure: FeSpace,
    settings: Optional[Settings] = None,
    operators: Optional[AssembledOperators] = None,
) -> float:
    """
    Discrete inf-sup constant of a velocity/pressure pair in the full H1 velocity norm

    A pressure space holding only constants has an empty zero-mean complement and gives inf.

    Raises:
        EmptyVelocitySpace: The velocity space has no DOFs after boundary conditions
    """
    settings = settings or get_settings()
    if pressure.n_dofs <= 1:
        return math.inf
    if velocity.n_dofs == 0:
        raise EmptyVelocitySpace(f"{velocity.label} has no degrees of freedom")
    operators = operators or assemble(velocity, pressure, settings)
    return _beta(operators, mean_functional(pressure, settings), f"{velocity.label}-{pressure.label}")


def infsup_constant(
    pair: Pair,
    level: int = 0,
    settings: Optional[Settings] = None,
    operators: Optional[AssembledOperators] = None,
) -> InfSupReport:
    """
    beta_h of a catalog pair

    Raises:
        EmptyVelocitySpace: The velocity space has no DOFs after boundary conditions
    """
    settings = settings or get_settings()
    beta = infsup_for_spaces(pair.velocity, pair.pressure, settings, operators)
    report = InfSupReport(
        pair=pair.name,
        d=pair.velocity.dim,
        k=pair.k,
        level=level,
        n_u=pair.velocity.n_dofs,
        n_p=pair.pressure.n_dofs,
        beta_h=beta,
        threshold=settings.stable_threshold,
    )
    logger.info("infsup_computed", pair=pair.name, level=level, beta_h=beta, n_u=report.n_u, n_p=report.n_p)
    return report


def local_infsup_constant(
    refined: RefinedMesh, cell: int, k: int, settings: Optional[Settings] = None
) -> float:
    """
    Inf-sup constant of P_k^c(K^r) with zero trace against zero-mean P_{k-1}(K^r) on one macro cell

    Raises:
        EmptyVelocitySpace: No interior velocity DOFs
    """
    settings = settings or get_settings()
    local = refined.submesh(cell)
    cache = BubbleCache(local, settings)
    velocity = build_space(local, SpaceKind.CG_REFINED, k, cache, settings)
    pressure = build_space(local, SpaceKind.DG_REFINED, k - 1, cache, settings)
    beta = infsup_for_spaces(velocity, pressure, settings)
    logger.debug("local_infsup_computed", cell=cell, k=k, beta=beta)
    return beta


def _lattice_samples(space: FeSpace, degree: int) -> np.ndarray:
    """Values of every basis field at the degree-``degree`` lattice of every child, one column per DOF"""
    n = space.dim + 1
    nodes = lattice_nodes(n, degree)
    block_rows = nodes.shape[0] * space.ncomp
    out = np.zeros((space.refined.n_cells * n * block_rows, space.n_dofs))
    for c, basis in enumerate(space.cell_basis):
        for gid, phi in basis:
            for i in range(n):
                start = (c * n + i) * block_rows
                out[start : start + block_rows, gid] = phi.evaluate(i, nodes).ravel()
    return out


def _inclusion_gap(container: FeSpace, contained: FeSpace) -> int:
    """rank([container | contained]) - rank(container), sampled on unisolvent lattices"""
    degree = max(container.degree, contained.degree, 1)
    a = _lattice_samples(container, degree)
    b = _lattice_samples(contained, degree)
    return matrix_rank(np.hstack([a, b]), 1e-10) - matrix_rank(a, 1e-10)


@dataclass
class BootstrapReport:
    velocity: str
    k: int
    beta_macro: float
    beta_refined: float
    threshold: float

    @property
    def consistent(self) -> bool:
        return self.beta_refined > self.threshold or self.beta_macro <= self.threshold

    def to_dict(self) -> Dict[str, object]:
        row = asdict(self)
        row["consistent"] = self.consistent
        return row


def bootstrap_check(
    velocity: FeSpace,
    k: int,
    cache: Optional[BubbleCache] = None,
    settings: Optional[Settings] = None,
) -> BootstrapReport:
    """
    beta_h of V_h - P0(T) and of V_h - P_{k-1}(T^r) for V_h containing P_k^c(T^r)

    Raises:
        HypothesisViolated: V_h does not contain the continuous refined Lagrange space of degree k
    """
    settings = settings or get_settings()
    refined = velocity.refined
    cache = cache or BubbleCache(refined, settings)
    lagrange = build_space(refined, SpaceKind.CG_REFINED, k, cache, settings)
    gap = _inclusion_gap(velocity, lagrange)
    if gap > 0:
        raise HypothesisViolated(f"{velocity.label} misses {gap} directions of {lagrange.label}")
    report = BootstrapReport(
        velocity=velocity.label,
        k=k,
        beta_macro=infsup_for_spaces(velocity, build_space(refined, SpaceKind.DG_MACRO, 0, cache, settings), settings),
        beta_refined=infsup_for_spaces(
            velocity, build_space(refined, SpaceKind.DG_REFINED, k - 1, cache, settings), settings
        ),
        threshold=settings.stable_threshold,
    )
    if not report.consistent:
        assertions_failed.labels(check="bootstrap").inc()
        logger.error("bootstrap_inconsistent", **report.to_dict())
    else:
        logger.info("bootstrap_checked", **report.to_dict())
    return report


@dataclass
class EquivalenceReport:
    k: int
    beta_refined: float
    beta_macro: float
    threshold: float

    @property
    def consistent(self) -> bool:
        return (self.beta_refined > self.threshold) == (self.beta_macro > self.threshold)

    def to_dict(self) -> Dict[str, object]:
        row = asdict(self)
        row["consistent"] = self.consistent
        row["label_refined"] = "stable" if self.beta_refined > self.threshold else "locked"
        row["label_macro"] = "stable" if self.beta_macro > self.threshold else "locked"
        return row


def _beta_or_zero(velocity: FeSpace, pressure: FeSpace, settings: Settings) -> float:
    try:
        return infsup_for_spaces(velocity, pressure, settings)
    except EmptyVelocitySpace:
        return 0.0


def equivalence_check(
    refined: RefinedMesh, k: int, cache: Optional[BubbleCache] = None, settings: Optional[Settings] = None
) -> EquivalenceReport:
    """
    beta of P_k^c(T^r) - P_{k-1}(T^r) and of P_k^c(T) - P0(T); each should be stable iff the other is

    An empty velocity space counts as beta = 0.
    """
    settings = settings or get_settings()
    cache = cache or BubbleCache(refined, settings)
    report = EquivalenceReport(
        k=k,
        beta_refined=_beta_or_zero(
            build_space(refined, SpaceKind.CG_REFINED, k, cache, settings),
            build_space(refined, SpaceKind.DG_REFINED, k - 1, cache, settings),
            settings,
        ),
        beta_macro=_beta_or_zero(
            build_space(refined, SpaceKind.CG_MACRO, k, cache, settings),
            build_space(refined, SpaceKind.DG_MACRO, 0, cache, settings),
            settings,
        ),
        threshold=settings.stable_threshold,
    )
    if not report.consistent:
        assertions_failed.labels(check="equivalence").inc()
        logger.error("equivalence_inconsistent", **report.to_dict())
    else:
        logger.info("equivalence_checked", **report.to_dict())
    return report


@dataclass
class SurjectivityResult:
    """Velocity coefficients with div v = p and the achieved residuals"""

    velocity: np.ndarray
    l2_residual: float
    vertex_residual: float

    def to_dict(self) -> Dict[str, float]:
        return {"l2_residual": self.l2_residual, "vertex_residual": self.vertex_residual}


def _vertex_values(space: FeSpace, coefficients: np.ndarray, of_divergence: bool = False) -> Dict[int, float]:
    """Values (or divergence) at every macro vertex, read from the first cell containing it"""
    refined = space.refined
    d = refined.dim
    out: Dict[int, float] = {}
    for c, cell in enumerate(refined.macro.cells):
        todo = [j for j, v in enumerate(cell.vertex_ids) if v not in out]
        if not todo:
            continue
        ls = lambda_system(refined, c, exact=False)
        field = space.field_on_cell(c, coefficients)
        if of_divergence:
            field = divergence(field, ls)
        values = evaluate_at_macro_points(field, ls, np.eye(d + 1)[todo])
        for j, value in zip(todo, values[:, 0]):
            out[cell.vertex_ids[j]] = float(value)
    return out


def surjectivity_solve(
    pair: Pair,
    pressure: np.ndarray,
    settings: Optional[Settings] = None,
    operators: Optional[AssembledOperators] = None,
) -> SurjectivityResult:
    """
    Velocity v in the pair's space with div v = p

    Divergence-at-vertex DOFs take the vertex values of p; facet flux DOFs then
    balance the remaining cell integrals (minimal-norm solution of the flux
    system on the macro cell graph). Spaces without facet DOFs use all DOFs.

    Raises:
        MeanNotZero: int p != 0
        FluxSystemSingular: The flux balance has no solution
    """
    settings = settings or get_settings()
    velocity, target = pair.velocity, pair.pressure
    operators = operators or assemble(velocity, target, settings)
    pressure = np.asarray(pressure, dtype=float)
    mean_row = mean_functional(target, settings)
    scale = float(np.linalg.norm(mean_row) * np.linalg.norm(pressure))
    if abs(mean_row @ pressure) > settings.exactness_tol * max(scale, 1e-300):
        raise MeanNotZero(f"int p = {mean_row @ pressure:.3e}")

    mp = scipy.sparse.linalg.splu(operators.Mp.tocsc())
    projection = mp.solve(operators.B.toarray())
    coefficients = np.zeros(velocity.n_dofs)

    keys = velocity.dofmap.keys
    vertex_dofs = [g for g, key in enumerate(keys) if key[0] == "dv"]
    if vertex_dofs:
        values = _vertex_values(target, pressure)
        for g in vertex_dofs:
            coefficients[g] = values[keys[g][1]]
    facet_dofs = [g for g, key in enumerate(keys) if key[0] == "f"] or list(range(velocity.n_dofs))
    residual = pressure - projection @ coefficients
    if np.any(residual) and facet_dofs:
        solution = least_squares(projection[:, facet_dofs], residual)
        coefficients[facet_dofs] = solution
    achieved = projection @ coefficients - pressure
    p_norm = math.sqrt(max(float(pressure @ (operators.Mp @ pressure)), 0.0))
    l2_residual = math.sqrt(max(float(achieved @ (operators.Mp @ achieved)), 0.0)) / max(p_norm, 1e-300)
    if p_norm > 0.0 and l2_residual > settings.exactness_tol:
        logger.error("flux_system_singular", pair=pair.name, residual=l2_residual)
        raise FluxSystemSingular(f"div v = p fails with relative residual {l2_residual:.3e}")

    vertex_residual = 0.0
    if vertex_dofs:
        div_values = _vertex_values(velocity, coefficients, of_divergence=True)
        p_values = _vertex_values(target, pressure)
        vertex_residual = max(abs(div_values[v] - p_values[v]) for v in p_values)
    logger.info("surjectivity_solved", pair=pair.name, l2_residual=l2_residual, vertex_residual=vertex_residual)
    return SurjectivityResult(coefficients, l2_residual if p_norm > 0.0 else 0.0, vertex_residual)


def refinement_sweep(betas: Sequence[float]) -> float:
    """min beta / max beta over a family of levels (infinite values are skipped)"""
    betas = [b for b in betas if math.isfinite(b)]
    if not betas or max(betas) == 0.0:
        return 0.0
    return min(betas) / max(betas)
