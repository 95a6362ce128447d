"""Splittable counter-based random number generators"""

from typing import List

import numpy as np


def make_rng(seed: int) -> np.random.Generator:
    """Philox generator for a seed"""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def spawn_rngs(seed: int, count: int) -> List[np.random.Generator]:
    """
    Independent Philox streams derived from one seed

    Stream j depends only on (seed, j), so jobs can run in any order.
    """
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.Philox(child)) for child in children]
