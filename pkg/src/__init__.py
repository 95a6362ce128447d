"""Divergence-free Stokes element pairs on barycentric (Alfeld) refinements"""

__version__ = "0.1.0"
