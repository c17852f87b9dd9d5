"""
Floating-point real-analytic layer: mollified steps, analytic slides and norms.
"""

from .good_domain import GoodDomain
from .mollifier import MollifiedStep, mollify_step
from .norms import DerivativeReport, d_rho, derivative_norm, strip_norm, strip_norm_curve
from .torus_maps import (
    AnalyticRotation,
    AnalyticSlide,
    AnalyticTorusMap,
    ClosenessReport,
    build_h_analytic,
    closeness_report,
    closeness_samples,
    torus_gap,
)

__all__ = [
    "AnalyticRotation",
    "AnalyticSlide",
    "AnalyticTorusMap",
    "ClosenessReport",
    "DerivativeReport",
    "GoodDomain",
    "MollifiedStep",
    "build_h_analytic",
    "closeness_report",
    "closeness_samples",
    "d_rho",
    "derivative_norm",
    "mollify_step",
    "strip_norm",
    "strip_norm_curve",
    "torus_gap",
]
