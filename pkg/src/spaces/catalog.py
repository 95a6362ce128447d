"""Catalog of velocity/pressure pairs"""

from dataclasses import dataclass
from typing import Callable, Dict, Optional

import structlog

from src.config.models import Settings, get_settings
from src.elements.bubbles import BubbleCache
from src.errors import DimensionRule, UnsupportedKind
from src.mesh.simplex_mesh import RefinedMesh
from src.spaces.assembly import check_direct_sum
from src.spaces.spaces import FeSpace, SpaceKind, build_space, direct_sum

logger = structlog.get_logger()


@dataclass(frozen=True)
class PairSpec:
    """
    A velocity/pressure pair

    ``divergence_free``: div V_h lies in the pressure space.
    ``certified``: the pair is known to be inf-sup stable for the given d and k.
    """

    name: str
    description: str
    divergence_free: bool
    certified: Callable[[int, int], bool]


PAIRS: Dict[str, PairSpec] = {
    "cor5.2": PairSpec("cor5.2", "P1c(T) + V_MF / P0(T)", True, lambda d, k: True),
    "thm4.4": PairSpec("thm4.4", "V_MF / P0(T)", True, lambda d, k: False),
    "br": PairSpec("br", "V_BR / P0(T)", False, lambda d, k: False),
    "Pk-P0": PairSpec("Pk-P0", "Pkc(T) / P0(T)", False, lambda d, k: False),
    "Pk-Pk-1r": PairSpec("Pk-Pk-1r", "Pkc(Tr) / Pk-1(Tr)", True, lambda d, k: k >= d),
    "cor6.4": PairSpec("cor6.4", "Pkc(Tr) + V_MF / Pk-1(Tr)", True, lambda d, k: 1 <= k < d),
    "thm6.6": PairSpec("thm6.6", "V_R / W_R", True, lambda d, k: True),
    "lemma6.7": PairSpec("lemma6.7", "V_div / W_R", True, lambda d, k: False),
    "cor6.8": PairSpec("cor6.8", "P1(K) + V_S + V_MF / W_R", True, lambda d, k: True),
}


@dataclass
class Pair:
    spec: PairSpec
    velocity: FeSpace
    pressure: FeSpace
    k: int

    @property
    def name(self) -> str:
        return self.spec.name

    @property
    def certified(self) -> bool:
        return self.spec.certified(self.velocity.dim, self.k)


def velocity_degree(name: str, k: int, d: int) -> int:
    """Nominal polynomial degree of the velocity space (used for error quadrature)"""
    if name in ("Pk-P0", "Pk-Pk-1r"):
        return k
    if name == "cor6.4":
        return max(k, d)
    if name in ("cor5.2", "thm4.4", "br", "lemma6.7", "cor6.8"):
        return d
    if name == "thm6.6":
        return max(2, d)
    raise UnsupportedKind(f"unknown pair {name}")


def build_pair(
    name: str,
    refined: RefinedMesh,
    k: int = 1,
    cache: Optional[BubbleCache] = None,
    settings: Optional[Settings] = None,
) -> Pair:
    """
    Build the velocity and pressure spaces of a catalog pair

    Raises:
        UnsupportedKind: Unknown pair name
        DimensionRule: Degree outside the pair's range
        HypothesisViolated: A sum of spaces is not direct
    """
    settings = settings or get_settings()
    if name not in PAIRS:
        raise UnsupportedKind(f"unknown pair {name}")
    cache = cache or BubbleCache(refined, settings)
    d = refined.dim

    def space(kind: SpaceKind, degree: int = 1) -> FeSpace:
        return build_space(refined, kind, degree, cache, settings)

    if name == "cor5.2":
        velocity = direct_sum([space(SpaceKind.CG_MACRO, 1), space(SpaceKind.MF)], "P1c(T)+V_MF")
        check_direct_sum(velocity, settings)
        pressure = space(SpaceKind.DG_MACRO, 0)
    elif name == "thm4.4":
        velocity, pressure = space(SpaceKind.MF), space(SpaceKind.DG_MACRO, 0)
    elif name == "br":
        velocity, pressure = space(SpaceKind.BR), space(SpaceKind.DG_MACRO, 0)
    elif name == "Pk-P0":
        velocity, pressure = space(SpaceKind.CG_MACRO, k), space(SpaceKind.DG_MACRO, 0)
    elif name == "Pk-Pk-1r":
        velocity, pressure = space(SpaceKind.CG_REFINED, k), space(SpaceKind.DG_REFINED, k - 1)
    elif name == "cor6.4":
        if not 1 <= k < d:
            raise DimensionRule(f"cor6.4 needs 1 <= k < d, got k={k}, d={d}")
        velocity = direct_sum([space(SpaceKind.CG_REFINED, k), space(SpaceKind.MF)], f"P{k}c(Tr)+V_MF")
        check_direct_sum(velocity, settings)
        pressure = space(SpaceKind.DG_REFINED, k - 1)
    elif name == "thm6.6":
        velocity, pressure = space(SpaceKind.VR), space(SpaceKind.W_R)
    elif name == "lemma6.7":
        velocity, pressure = space(SpaceKind.VDIV), space(SpaceKind.W_R)
    else:
        velocity, pressure = space(SpaceKind.VH68), space(SpaceKind.W_R)

    logger.info("pair_built", pair=name, k=k, d=d, n_u=velocity.n_dofs, n_p=pressure.n_dofs)
    return Pair(PAIRS[name], velocity, pressure, k)
