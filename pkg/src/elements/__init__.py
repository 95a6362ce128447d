"""Local bubble fields on barycentric splits"""

from .bubbles import (
    BubbleCache,
    FaceBubble,
    ModifiedBubble,
    PsiField,
    ThetaField,
    build_psi,
    build_theta,
    face_bubble,
    face_flux,
    modified_bubble_checks,
    modify_bubble,
)

__all__ = [
    "BubbleCache",
    "FaceBubble",
    "ModifiedBubble",
    "PsiField",
    "ThetaField",
    "build_psi",
    "build_theta",
    "face_bubble",
    "face_flux",
    "modified_bubble_checks",
    "modify_bubble",
]
