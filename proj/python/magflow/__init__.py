"""Magnetic geodesic flows on model surfaces.

Thin wrapper over the compiled extension: surfaces, trajectory integration,
alpha-determinant traces, two-point trajectory counting, and the Monte Carlo
estimators for both sides of the counting identity.
"""

from ._core import (
    ChartPoint,
    ConfigError,
    CountOptions,
    SurfaceModel,
    alpha_determinant_along,
    count_connections,
    entropy_report,
    lemma_check,
    lhs_integral,
    log_det_growth,
    rhs_integral,
    trajectory,
)

__all__ = [
    "ChartPoint",
    "ConfigError",
    "CountOptions",
    "SurfaceModel",
    "alpha_determinant_along",
    "count_connections",
    "entropy_report",
    "lemma_check",
    "lhs_integral",
    "log_det_growth",
    "rhs_integral",
    "trajectory",
]
