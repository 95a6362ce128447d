"""
Local right inverse of the divergence on one barycentric split

Given a mean-zero piecewise polynomial p of degree k-1 on the split of a macro
cell K, builds a continuous field v of degree k vanishing on the boundary of K
with div v = p. The construction writes p in layers of powers of lambda_0,
removes the layers one by one with fields lambda_0^(l+1) lambda^alpha s_alpha
and finishes with a single correction s lambda_0^k.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
import structlog

from src.config.models import Settings, get_settings
from src.errors import DegreeMismatch, DegreeTooHigh, MeanNotZero, SingularNormalSystem
from src.linalg.dense import least_squares
from src.monitoring.metrics import assertions_failed, local_div_solves
from src.poly.bary import BaryPoly, _zeros, exponent_index, exponents
from src.poly.split import (
    Continuity,
    LambdaSystem,
    SplitPiecewisePoly,
    divergence,
    h1_norm,
    integrate,
    l2_norm,
)

logger = structlog.get_logger()

MultiIndex = Tuple[int, ...]


def macro_alpha(child: int, beta: MultiIndex) -> MultiIndex:
    """Macro multi-index of a child-local exponent (lambda_0 power dropped)"""
    tail = tuple(beta[1:])
    return tail[:child] + (0,) + tail[child:]


def child_exponent(child: int, ell: int, alpha: MultiIndex) -> MultiIndex:
    """Child-local exponent of lambda_0^ell lambda^alpha (requires alpha[child] == 0)"""
    return (ell,) + tuple(a for j, a in enumerate(alpha) if j != child)


@dataclass
class LayerDecomposition:
    """
    p = sum_l lambda_0^l sum_{|alpha| = s - l} a_alpha lambda^alpha

    ``layers[l][alpha]`` holds the child values of the piecewise constant
    a_alpha; entries on children i with alpha_i > 0 are zero.
    """

    d: int
    s: int
    exact: bool
    layers: Dict[int, Dict[MultiIndex, np.ndarray]] = field(default_factory=dict)

    def terms(self, ell: int) -> Dict[MultiIndex, np.ndarray]:
        return self.layers.get(ell, {})

    def layer_poly(self, ell: int, cell: int) -> SplitPiecewisePoly:
        """lambda_0^ell sum a_alpha lambda^alpha as a piecewise polynomial of degree s"""
        n = self.d + 1
        index = exponent_index(n, self.s)
        pieces = []
        for i in range(n):
            coeffs = _zeros((len(exponents(n, self.s)), 1), self.exact)
            for alpha, values in self.terms(ell).items():
                if alpha[i] == 0 and values[i] != 0:
                    coeffs[index[child_exponent(i, ell, alpha)], 0] += values[i]
            pieces.append(BaryPoly(n, self.s, coeffs))
        return SplitPiecewisePoly(cell, pieces, Continuity.L2)

    def reconstruct(self, cell: int) -> SplitPiecewisePoly:
        total = self.layer_poly(0, cell)
        for ell in range(1, self.s + 1):
            total = total + self.layer_poly(ell, cell)
        return total

    def norm_ratio(self, p_norm: float, ls: LambdaSystem) -> float:
        """sum_l ||p_l||^2 / ||p||^2"""
        if p_norm == 0.0:
            return 0.0
        total = sum(l2_norm(self.layer_poly(ell, ls.cell), ls) ** 2 for ell in range(self.s + 1))
        return float(total / p_norm**2)


def decompose(p: SplitPiecewisePoly, ls: LambdaSystem, s: Optional[int] = None) -> LayerDecomposition:
    """
    Split a scalar piecewise polynomial into lambda_0 layers

    Args:
        p: Scalar piecewise polynomial (no continuity required)
        ls: Lambda system of the cell
        s: Target degree (defaults to the degree of p)

    Returns:
        The unique layer decomposition

    Raises:
        DegreeMismatch: p has degree above s or is not scalar
    """
    degree = p.degree if s is None else s
    if p.degree > degree:
        raise DegreeMismatch(f"degree {p.degree} exceeds layer degree {degree}")
    if p.ncomp != 1:
        raise DegreeMismatch(f"layer decomposition needs a scalar field, got {p.ncomp} components")
    n = ls.d + 1
    decomposition = LayerDecomposition(ls.d, degree, p.exact, {ell: {} for ell in range(degree + 1)})
    for i, piece in enumerate(p.pieces):
        for beta, row in piece.elevate(degree).terms():
            alpha = macro_alpha(i, beta)
            entry = decomposition.layers[beta[0]].setdefault(alpha, _zeros((n,), p.exact))
            entry[i] = row[0]
    return decomposition


@dataclass
class StepResult:
    """div v = p_ell + q with q in layers ell+1 and above"""

    ell: int
    v: SplitPiecewisePoly
    q: SplitPiecewisePoly
    vectors: Dict[MultiIndex, np.ndarray]


def _solve_rows(rows: np.ndarray, rhs: np.ndarray, exact: bool, tol: float) -> np.ndarray:
    if all(x == 0 for x in rhs):
        return _zeros((rows.shape[1],), exact)
    vec = least_squares(rows, rhs)
    mismatch = rows.dot(vec) - rhs
    worst = float(np.max(np.abs(mismatch.astype(float))))
    if (exact and any(x != 0 for x in mismatch)) or worst > tol * max(1.0, float(np.max(np.abs(rhs.astype(float))))):
        logger.error("normal_system_singular", mismatch=worst, rows=rows.shape[0])
        raise SingularNormalSystem(f"normal system residual {worst:.3e}")
    return vec


def step(
    decomposition: LayerDecomposition, ell: int, ls: LambdaSystem, settings: Optional[Settings] = None
) -> StepResult:
    """
    Remove layer ``ell`` with a continuous field vanishing on the boundary

    For every alpha, s_alpha solves (ell+1) s_alpha . grad(lambda_0)|K_i = a_alpha|K_i
    on the children with alpha_i = 0 (minimal norm when underdetermined).

    Raises:
        DegreeMismatch: Layer has |alpha| = 0
        SingularNormalSystem: Rows are inconsistent
    """
    settings = settings or get_settings()
    s = decomposition.s
    if s - ell < 1:
        raise DegreeMismatch(f"layer {ell} of degree {s} has no lambda^alpha factor")
    n = ls.d + 1
    exact = decomposition.exact
    index = exponent_index(n, s + 1)
    coeffs = [_zeros((len(exponents(n, s + 1)), ls.d), exact) for _ in range(n)]
    vectors: Dict[MultiIndex, np.ndarray] = {}
    for alpha, values in sorted(decomposition.terms(ell).items()):
        active = [i for i in range(n) if alpha[i] == 0]
        rows = np.array([ls.grad_lambda0(i) for i in active]) * (ell + 1)
        vec = _solve_rows(rows, values[active], exact, settings.exactness_tol)
        vectors[alpha] = vec
        for i in active:
            coeffs[i][index[child_exponent(i, ell + 1, alpha)]] += vec
    v = SplitPiecewisePoly(ls.cell, [BaryPoly(n, s + 1, c) for c in coeffs], Continuity.C0)
    q = divergence(v, ls) - decomposition.layer_poly(ell, ls.cell)
    logger.debug("layer_step", cell=ls.cell, ell=ell, terms=len(vectors))
    return StepResult(ell, v, q, vectors)


@dataclass
class FinalCorrection:
    v: SplitPiecewisePoly
    vector: np.ndarray
    first_child_residual: float


def final_correction(
    b: np.ndarray,
    k: int,
    ls: LambdaSystem,
    settings: Optional[Settings] = None,
    reference: float = 0.0,
) -> FinalCorrection:
    """
    Field s lambda_0^k with div = b lambda_0^(k-1) for a zero-mean child-constant b

    The system is solved on children 1..d; the identity on child 0 follows
    from the zero mean and is checked afterwards.

    ``reference`` is an absolute scale for the mean test (the integral of |p|
    for the pressure that produced b).

    Raises:
        MeanNotZero: sum_i b_i |K_i| does not vanish
        SingularNormalSystem: Child 0 identity fails
    """
    settings = settings or get_settings()
    n = ls.d + 1
    exact = ls.exact
    b = np.asarray(b, dtype=object if exact else float)
    mean = sum(b[i] * ls.child_volumes[i] for i in range(n))
    scale = float(sum(abs(b[i]) * ls.child_volumes[i] for i in range(n)))
    if (exact and mean != 0) or abs(float(mean)) > settings.exactness_tol * max(scale, reference, 1e-300):
        raise MeanNotZero(f"weighted child sum {float(mean):.3e} is not zero")

    rows = np.array([ls.grad_lambda0(i) for i in range(1, n)]) * k
    vector = _solve_rows(rows, b[1:], exact, settings.exactness_tol)
    first = k * np.asarray(ls.grad_lambda0(0)).dot(vector) - b[0]
    first_residual = float(abs(first))
    bound = settings.exactness_tol * max(1.0, float(np.max(np.abs(b.astype(float)))))
    if (exact and first != 0) or first_residual > bound:
        assertions_failed.labels(check="final_correction").inc()
        logger.error("final_correction_failed", cell=ls.cell, residual=first_residual)
        raise SingularNormalSystem(f"child 0 identity violated by {first_residual:.3e}")

    lam0_power = (k,) + (0,) * ls.d
    pieces = [BaryPoly.monomial(n, lam0_power, vector, exact) for _ in range(n)]
    return FinalCorrection(SplitPiecewisePoly(ls.cell, pieces, Continuity.C0), vector, first_residual)


@dataclass
class DivSolveReport:
    v: SplitPiecewisePoly
    residual_norm: float
    stability_ratio: float
    layer_ratio: float
    k: int
    first_child_residual: float = 0.0

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "residual_norm": self.residual_norm,
            "first_child_residual": self.first_child_residual,
            "stability_ratio": self.stability_ratio,
            "layer_ratio": self.layer_ratio,
        }


def solve_local_div(
    p: SplitPiecewisePoly, k: int, ls: LambdaSystem, settings: Optional[Settings] = None
) -> DivSolveReport:
    """
    Continuous v of degree k, zero on the boundary of K, with div v = p

    Args:
        p: Mean-zero scalar piecewise polynomial of degree <= k-1
        k: Velocity degree (>= 1)
        ls: Lambda system of the cell
        settings: Numerical settings

    Returns:
        DivSolveReport with the field, ||div v - p|| and ||v||_H1 / ||p||

    Raises:
        DegreeTooHigh: k above the configured cap
        DegreeMismatch: k < 1 or p of degree above k-1
        MeanNotZero: p does not have zero mean
    """
    settings = settings or get_settings()
    if k > settings.degree_cap:
        raise DegreeTooHigh(f"degree {k} exceeds cap {settings.degree_cap}")
    if k < 1 or p.degree > k - 1:
        raise DegreeMismatch(f"pressure of degree {p.degree} needs k >= {p.degree + 1}, got {k}")
    if ls.exact and not p.exact:
        p = p.to_exact()

    s = k - 1
    p = p.elevate(s)
    p_norm = l2_norm(p, ls)
    total = integrate(p, ls)[0]
    if (ls.exact and total != 0) or abs(float(total)) > settings.exactness_tol * max(
        p_norm * float(ls.volume) ** 0.5, 1e-300
    ):
        raise MeanNotZero(f"integral {float(total):.3e} over cell {ls.cell}")

    layer_ratio = decompose(p, ls, s).norm_ratio(p_norm, ls)
    v = SplitPiecewisePoly.zeros(ls.cell, ls.d, k, ls.d, ls.exact)
    residual = p
    for ell in range(s):
        result = step(decompose(residual, ls, s), ell, ls, settings)
        v = v + result.v
        residual = residual - divergence(result.v, ls)

    last = decompose(residual, ls, s)
    n = ls.d + 1
    b = last.terms(s).get((0,) * n, _zeros((n,), ls.exact))
    reference = p_norm * float(ls.volume) ** 0.5
    correction = final_correction(b, k, ls, settings, reference)
    v = v + correction.v

    residual_norm = l2_norm(divergence(v, ls) - p, ls)
    stability_ratio = h1_norm(v, ls) / p_norm if p_norm > 0.0 else 0.0
    local_div_solves.labels(d=str(ls.d), k=str(k)).inc()
    logger.debug(
        "local_div_solved",
        cell=ls.cell,
        k=k,
        residual_norm=residual_norm,
        stability_ratio=stability_ratio,
    )
    return DivSolveReport(v, residual_norm, stability_ratio, layer_ratio, k, correction.first_child_residual)


def constant_field(ls: LambdaSystem, value) -> SplitPiecewisePoly:
    n = ls.d + 1
    pieces = [BaryPoly.constant(n, value, ls.exact) for _ in range(n)]
    return SplitPiecewisePoly(ls.cell, pieces, Continuity.C0)


def random_pressure(ls: LambdaSystem, degree: int, rng: np.random.Generator) -> SplitPiecewisePoly:
    """Random mean-zero discontinuous piecewise polynomial of the given degree"""
    n = ls.d + 1
    size = len(exponents(n, degree))
    pieces = [BaryPoly(n, degree, rng.standard_normal((size, 1))) for _ in range(n)]
    p = SplitPiecewisePoly(ls.cell, pieces, Continuity.L2)
    if ls.exact:
        p = p.to_exact()
    mean = integrate(p, ls)[0] / ls.volume
    return p - constant_field(ls, mean)


def norm_equivalence_ratio(ls: LambdaSystem, ell: int, m: int, rng: np.random.Generator) -> float:
    """
    sum_alpha ||a_alpha||^2 / ||p||^2 for p = lambda_0^ell sum a_alpha lambda^alpha

    Coefficients are random child values honoring a_alpha|K_i = 0 for alpha_i > 0.
    """
    n = ls.d + 1
    decomposition = LayerDecomposition(ls.d, ell + m, False, {ell: {}})
    coefficient_norm = 0.0
    for alpha in exponents(n, m):
        values = rng.standard_normal(n)
        values[[i for i in range(n) if alpha[i] > 0]] = 0.0
        decomposition.layers[ell][alpha] = values
        coefficient_norm += float(np.sum(values**2 * np.asarray(ls.child_volumes, dtype=float)))
    p = decomposition.layer_poly(ell, ls.cell)
    p_norm = l2_norm(p.to_exact() if ls.exact else p, ls)
    return coefficient_norm / p_norm**2
