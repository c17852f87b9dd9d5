"""
Koopman diagnostics on finite stages: correlations, weak limits and spectral densities.
"""

from .density import SpectralDensity, spectral_measure_estimate
from .koopman import (
    KoopmanCorrelations,
    Observable,
    PermutationSystem,
    correlations,
    koopman_apply,
    random_observables,
    stage_rotation,
    tower_observables,
)
from .weak_limit import KappaEstimate, WeakLimitFit, fit_weak_limit, kappa_statistic

__all__ = [
    "KappaEstimate",
    "KoopmanCorrelations",
    "Observable",
    "PermutationSystem",
    "SpectralDensity",
    "WeakLimitFit",
    "correlations",
    "fit_weak_limit",
    "kappa_statistic",
    "koopman_apply",
    "random_observables",
    "spectral_measure_estimate",
    "stage_rotation",
    "tower_observables",
]
