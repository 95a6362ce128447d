"""Utility modules"""

from .logging import run_context, setup_logging
from .rng import make_rng, spawn_rngs

__all__ = ["make_rng", "run_context", "setup_logging", "spawn_rngs"]
