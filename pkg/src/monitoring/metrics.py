"""Prometheus metrics for solver throughput and verification outcomes"""

from pathlib import Path
from typing import Union

from prometheus_client import (
    REGISTRY,
    Counter,
    Histogram,
    generate_latest,
    write_to_textfile,
)

# Local constructions
local_div_solves = Counter(
    'local_div_solves_total',
    'Total number of local divergence solves',
    ['d', 'k']
)

modified_bubbles_built = Counter(
    'modified_bubbles_built_total',
    'Total number of modified face bubbles constructed',
    ['d']
)

# Spaces and assembly
spaces_built = Counter(
    'spaces_built_total',
    'Total number of global finite element spaces built',
    ['kind']
)

assembly_latency = Histogram(
    'assembly_latency_seconds',
    'Operator assembly latency in seconds',
    ['velocity_kind', 'pressure_kind'],
    buckets=(0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 20.0, 60.0)
)

# Linear algebra
eigen_solve_latency = Histogram(
    'eigen_solve_latency_seconds',
    'Generalized eigenvalue solve latency in seconds',
    ['problem'],
    buckets=(0.001, 0.01, 0.1, 0.5, 1.0, 5.0, 30.0)
)

stokes_solves = Counter(
    'stokes_solves_total',
    'Total number of discrete Stokes solves',
    ['pair']
)

# Verification outcomes
assertions_failed = Counter(
    'assertions_failed_total',
    'Total number of failed verification assertions',
    ['check']
)


def get_metrics() -> bytes:
    """
    Generate Prometheus metrics in text format.

    Returns:
        Metrics in Prometheus text format
    """
    return generate_latest()


def dump_metrics(path: Union[str, Path]) -> None:
    """
    Write the default registry to a text file (node-exporter textfile format).

    Args:
        path: Destination file
    """
    write_to_textfile(str(path), REGISTRY)
