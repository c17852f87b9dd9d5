"""
Sampled strip norms, the metric d_rho and derivative norms.

Every estimate here is a lower bound of a supremum: points are drawn on the
boundary of the strip |Im z_i| <= rho, where the maximum modulus of an entire
periodic function is attained.  Samples come from a seeded generator whose
prefixes are nested, so a larger sample never lowers an estimate.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

import config
from analytic.torus_maps import AnalyticTorusMap
from errors import require

LOGGER = logging.getLogger(__name__)

ArrayFunction = Callable[[np.ndarray], np.ndarray]


def _real_parts(samples: int, d: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).random(samples * d).reshape(samples, d)


def strip_points(samples: int, d: int, rho: float, seed: int = config.RANDOM_SEED) -> np.ndarray:
    """Sample points on every corner face Im z = (+-rho, ..., +-rho) of the strip."""
    real = _real_parts(samples, d, seed)
    if rho == 0:
        return real
    faces = [np.array(signs) * rho for signs in itertools.product((-1.0, 1.0), repeat=d)]
    return np.concatenate([real + 1j * face[None, :] for face in faces])


def _sup(values: np.ndarray) -> float:
    with np.errstate(over="ignore", invalid="ignore"):
        magnitude = np.abs(np.asarray(values))
    if magnitude.size == 0:
        return 0.0
    if not np.all(np.isfinite(magnitude)):
        return float("inf")
    return float(magnitude.max())


def strip_norm(
    f: ArrayFunction, rho: float, samples: int = config.SAMPLES, d: int = 1, seed: int = config.RANDOM_SEED
) -> float:
    """
    Lower estimate of sup |f| over the strip of half-width ``rho``.

    ``f`` takes a 1-D array when ``d == 1`` and an (n, d) array otherwise.  Overflow
    or NaN in the evaluation is reported as +inf.
    """
    require(rho >= 0, f"strip half-width must be non-negative, got {rho}")
    z = strip_points(samples, d, rho, seed)
    if d == 1:
        z = z[:, 0]
    with np.errstate(over="ignore", invalid="ignore"):
        return _sup(f(z))


def _lift_gap(f: AnalyticTorusMap, g: AnalyticTorusMap, rho: float, samples: int, seed: int) -> float:
    """inf over integer vectors n of max_i sup |f_i - g_i - n_i| on the strip."""
    z = strip_points(samples, f.d, rho, seed)
    with np.errstate(over="ignore", invalid="ignore"):
        diff = f(z) - g(z)
    if not np.all(np.isfinite(diff)):
        return float("inf")
    centre = np.round(np.median(diff.real, axis=0))
    best = np.full(f.d, np.inf)
    for offset in (-1.0, 0.0, 1.0):
        best = np.minimum(best, np.abs(diff - (centre + offset)[None, :]).max(axis=0))
    return float(best.max())


def d_rho(
    f: AnalyticTorusMap,
    g: AnalyticTorusMap,
    rho: float,
    samples: int = config.SAMPLES,
    seed: int = config.RANDOM_SEED,
) -> float:
    require(f.d == g.d, f"maps act on tori of different dimension: {f.d} and {g.d}")
    forward = _lift_gap(f, g, rho, samples, seed)
    backward = _lift_gap(f.inverse(), g.inverse(), rho, samples, seed)
    return max(forward, backward)


@dataclass(frozen=True)
class DerivativeReport:
    rho: float
    sup: float
    fd_sup: float
    max_rel_diff: float

    @property
    def agrees(self) -> bool:
        return self.max_rel_diff <= config.FD_RTOL

    def to_dict(self) -> dict[str, float | bool]:
        return {
            "rho": self.rho,
            "sup": self.sup,
            "fd_sup": self.fd_sup,
            "max_rel_diff": self.max_rel_diff,
            "agrees": self.agrees,
        }


def finite_difference_jacobian(h: AnalyticTorusMap, z: np.ndarray, step: float = config.FD_STEP) -> np.ndarray:
    n, d = z.shape
    jac = np.empty((n, d, d), dtype=z.dtype)
    for j in range(d):
        shift = np.zeros(d)
        shift[j] = step
        jac[:, :, j] = (h(z + shift) - h(z - shift)) / (2.0 * step)
    return jac


def derivative_norm(
    h: AnalyticTorusMap,
    samples: int = config.SAMPLES,
    rho: float = 0.0,
    seed: int = config.RANDOM_SEED,
) -> DerivativeReport:
    """Sampled max_ij sup |dh_i/dx_j| with a central-difference cross-check."""
    z = strip_points(samples, h.d, rho, seed)
    analytic = h.jacobian(z)
    numeric = finite_difference_jacobian(h, z)
    sup = _sup(analytic)
    scale = max(sup, 1.0)
    rel = float(np.abs(analytic - numeric).max() / scale) if analytic.size else 0.0
    report = DerivativeReport(rho=rho, sup=sup, fd_sup=_sup(numeric), max_rel_diff=rel)
    if not report.agrees:
        LOGGER.warning("finite differences disagree with the analytic Jacobian of %s by %.2e", h.label, rel)
    return report


def strip_norm_curve(
    f: ArrayFunction, rhos: list[float], samples: int = config.SAMPLES, d: int = 1, seed: int = config.RANDOM_SEED
) -> list[tuple[float, float]]:
    return [(rho, strip_norm(f, rho, samples, d, seed)) for rho in rhos]
