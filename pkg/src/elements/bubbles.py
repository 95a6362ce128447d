"""Face bubbles, modified bubbles with constant divergence, and the psi/theta fields"""

from dataclasses import dataclass
from fractions import Fraction
from math import factorial
from typing import Dict, Optional, Tuple

import numpy as np
import structlog

from src.config.models import Settings, get_settings
from src.errors import SingularGradientSystem
from src.linalg.dense import condition_number, least_squares
from src.mesh.simplex_mesh import RefinedMesh
from src.monitoring.metrics import modified_bubbles_built
from src.poly.bary import BaryPoly, to_exact
from src.poly.quadrature import quadrature
from src.poly.split import (
    LambdaSystem,
    SplitPiecewisePoly,
    boundary_points,
    boundary_trace,
    continuity_residual,
    divergence,
    h1_norm,
    integrate,
    lambda_system,
    restrict_macro_poly,
)
from src.solvers.local_div import constant_field, solve_local_div

logger = structlog.get_logger()


def face_flux(v: SplitPiecewisePoly, ls: LambdaSystem, face: int, settings: Optional[Settings] = None) -> float:
    """
    Outward flux of v through macro facet F_face

    F_face is the facet of child ``face`` opposite the split point, so the
    integral only needs that child.
    """
    rule = quadrature(ls.d - 1, max(v.degree, 1), settings)
    values = v.evaluate(face, boundary_points(ls, face, rule.points))
    return float(ls.face_measures[face] * rule.weights.dot(values.dot(ls.normals[face])))


def _normal(ls: LambdaSystem, i: int) -> np.ndarray:
    return to_exact(ls.normals[i]) if ls.exact else ls.normals[i]


@dataclass
class FaceBubble:
    """b_i = B_i n_i with B_i the product of the macro coordinates mu_j, j != i"""

    i: int
    macro: BaryPoly
    field: SplitPiecewisePoly
    flux: float


def face_bubble(ls: LambdaSystem, i: int) -> FaceBubble:
    """
    Face bubble of facet F_i, as a macro polynomial and restricted to the split

    Args:
        ls: Lambda system of the cell
        i: Face index (0-based, facet opposite macro vertex i)

    Returns:
        FaceBubble with flux |F_i| (d-1)! / (2d-1)!
    """
    d = ls.d
    if not 0 <= i <= d:
        raise IndexError(f"face index {i} out of range for dimension {d}")
    alpha = tuple(0 if j == i else 1 for j in range(d + 1))
    scalar = BaryPoly.monomial(d + 1, alpha, 1, ls.exact)
    macro = scalar.outer(_normal(ls, i))
    flux = float(ls.face_measures[i]) * factorial(d - 1) / factorial(2 * d - 1)
    return FaceBubble(i, macro, restrict_macro_poly(macro, ls), flux)


@dataclass
class ModifiedBubble:
    """beta_i = b_i - w_i with w_i vanishing on the boundary and div beta_i constant"""

    i: int
    field: SplitPiecewisePoly
    bubble: FaceBubble
    div_value: float
    stability_ratio: float
    correction_residual: float

    def to_dict(self) -> dict:
        return {
            "face": self.i,
            "div_value": self.div_value,
            "flux": self.bubble.flux,
            "stability_ratio": self.stability_ratio,
            "correction_residual": self.correction_residual,
        }


def modify_bubble(ls: LambdaSystem, i: int, settings: Optional[Settings] = None) -> ModifiedBubble:
    """
    Correct b_i by a degree-d field so that its divergence is the constant flux / |K|

    Args:
        ls: Lambda system of the cell
        i: Face index (0-based)
        settings: Numerical settings

    Returns:
        ModifiedBubble with div_value = |K|^-1 int_{F_i} B_i
    """
    settings = settings or get_settings()
    bubble = face_bubble(ls, i)
    div_b = divergence(bubble.field, ls)
    mean = integrate(div_b, ls)[0] / ls.volume
    g = div_b - constant_field(ls, mean)
    correction = solve_local_div(g, ls.d, ls, settings)
    beta = bubble.field - correction.v
    beta_norm = h1_norm(beta, ls)
    b_norm = h1_norm(bubble.field, ls)
    modified_bubbles_built.labels(d=str(ls.d)).inc()
    logger.debug("modified_bubble_built", cell=ls.cell, face=i, div_value=float(mean))
    return ModifiedBubble(
        i=i,
        field=beta,
        bubble=bubble,
        div_value=bubble.flux / float(ls.volume),
        stability_ratio=beta_norm / b_norm if b_norm > 0.0 else 0.0,
        correction_residual=correction.residual_norm,
    )


def modified_bubble_checks(
    mb: ModifiedBubble, ls: LambdaSystem, rng: Optional[np.random.Generator] = None, n_points: int = 100
) -> Dict[str, float]:
    """Trace, constant-divergence and continuity residuals of a modified bubble"""
    div_beta = divergence(mb.field, ls)
    deviation = div_beta - constant_field(ls, mb.div_value)
    return {
        "trace": boundary_trace(mb.field - mb.bubble.field, ls, rng, n_points),
        "div_deviation": deviation.max_abs(),
        "continuity": continuity_residual(mb.field, ls),
        "flux": face_flux(mb.field, ls, mb.i),
    }


def _gradient_solve(rows: np.ndarray, exact: bool, settings: Settings) -> np.ndarray:
    d = rows.shape[1]
    if exact:
        vector = least_squares(rows, np.array([1] * d, dtype=object))
        if any(x != 1 for x in rows.dot(vector)):
            raise SingularGradientSystem("gradient rows are dependent")
        return vector
    cond = condition_number(rows)
    if not np.isfinite(cond) or cond > 1.0 / settings.exactness_tol:
        logger.error("gradient_system_singular", condition=cond)
        raise SingularGradientSystem(f"gradient system condition {cond:.3e}")
    return np.linalg.solve(rows, np.ones(d))


@dataclass
class PsiField:
    """psi_i = c lambda_i^2 with div psi_i = lambda_i"""

    i: int
    c: np.ndarray
    field: SplitPiecewisePoly


@dataclass
class ThetaField:
    """theta_i = c (lambda_i^2 - mu_i^2) / 2, zero on the boundary with div theta_i(x_j) = delta_ij"""

    i: int
    c: np.ndarray
    field: SplitPiecewisePoly


def build_psi(ls: LambdaSystem, i: int, settings: Optional[Settings] = None) -> PsiField:
    """
    Solve 2 c . grad(lambda_i)|K_j = 1 for j != i

    Raises:
        SingularGradientSystem: The d gradients are dependent
    """
    settings = settings or get_settings()
    rows = np.array([ls.ext_grads[j, i + 1] for j in range(ls.d + 1) if j != i]) * 2
    c = _gradient_solve(rows, ls.exact, settings)
    lam = ls.lam(i + 1)
    return PsiField(i, c, (lam * lam).outer(c))


def build_theta(ls: LambdaSystem, i: int, settings: Optional[Settings] = None) -> ThetaField:
    """
    Solve c . grad(lambda_i - mu_i)|K_j = 1 for j != i

    lambda_i - mu_i = -mu_i(x_0) lambda_0, so the rows are -mu_i(x_0) grad(lambda_0)|K_j.

    Raises:
        SingularGradientSystem: The d gradients are dependent
    """
    settings = settings or get_settings()
    rows = np.array([ls.grad_lambda0(j) for j in range(ls.d + 1) if j != i]) * (-ls.mu_split[i])
    c = _gradient_solve(rows, ls.exact, settings)
    lam = ls.lam(i + 1)
    mu = ls.mu(i)
    half = (lam * lam - mu * mu) * (Fraction(1, 2) if ls.exact else 0.5)
    return ThetaField(i, c, half.outer(c))


class BubbleCache:
    """
    Per refined mesh store of lambda systems and bubble fields

    Entries are keyed by (cell, face, kind) and built on first use.
    """

    def __init__(self, refined: RefinedMesh, settings: Optional[Settings] = None, exact: bool = False):
        self.refined = refined
        self.settings = settings or get_settings()
        self.exact = exact
        self._systems: Dict[int, LambdaSystem] = {}
        self._entries: Dict[Tuple[int, int, str], object] = {}
        self.hits = 0
        self.misses = 0
        self._logger = logger.bind(component="bubble_cache")

    def lambda_system(self, cell: int) -> LambdaSystem:
        if cell not in self._systems:
            self._systems[cell] = lambda_system(self.refined, cell, exact=self.exact, settings=self.settings)
        return self._systems[cell]

    def _get(self, cell: int, i: int, kind: str, builder):
        key = (cell, i, kind)
        if key in self._entries:
            self.hits += 1
            return self._entries[key]
        self.misses += 1
        value = builder(self.lambda_system(cell), i)
        self._entries[key] = value
        return value

    def face_bubble(self, cell: int, i: int) -> FaceBubble:
        return self._get(cell, i, "face", face_bubble)

    def modified_bubble(self, cell: int, i: int) -> ModifiedBubble:
        return self._get(cell, i, "modified", lambda ls, j: modify_bubble(ls, j, self.settings))

    def psi(self, cell: int, i: int) -> PsiField:
        return self._get(cell, i, "psi", lambda ls, j: build_psi(ls, j, self.settings))

    def theta(self, cell: int, i: int) -> ThetaField:
        return self._get(cell, i, "theta", lambda ls, j: build_theta(ls, j, self.settings))

    def stats(self) -> Dict[str, int]:
        return {"entries": len(self._entries), "hits": self.hits, "misses": self.misses}
