"""Finite element spaces, local elements, assembly and the pair catalog"""

from .assembly import (
    AssembledOperators,
    assemble,
    assemble_load,
    cell_tables,
    check_direct_sum,
    divergence_image_check,
    mean_functional,
    velocity_gram,
)
from .catalog import PAIRS, Pair, PairSpec, build_pair, velocity_degree
from .local_elements import (
    LocalElement,
    UnisolvenceReport,
    build_local_element,
    check_unisolvence,
    div_conforming_p2_dimension,
    div_conforming_p2_report,
    vr_local_dimension,
)
from .spaces import (
    DofMap,
    FeSpace,
    SpaceKind,
    build_space,
    conformity_residuals,
    direct_sum,
    expected_dimension,
)

__all__ = [
    "PAIRS",
    "AssembledOperators",
    "DofMap",
    "FeSpace",
    "LocalElement",
    "Pair",
    "PairSpec",
    "SpaceKind",
    "UnisolvenceReport",
    "assemble",
    "assemble_load",
    "build_local_element",
    "build_pair",
    "build_space",
    "cell_tables",
    "check_direct_sum",
    "check_unisolvence",
    "conformity_residuals",
    "direct_sum",
    "div_conforming_p2_dimension",
    "div_conforming_p2_report",
    "divergence_image_check",
    "expected_dimension",
    "mean_functional",
    "velocity_degree",
    "velocity_gram",
    "vr_local_dimension",
]
