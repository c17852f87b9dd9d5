"""
Weak-limit fits for powers of the Koopman operator.

Linked (h, h+1) towers predict U^{h+1} -> r U + (1 - r) Id weakly.  Testing the
limit on observable pairs (f, g) gives one linear equation per pair,

    <U^{h+1} f, g> - <f, g> = r (<U f, g> - <f, g>),

and r is the least-squares slope through the origin.  The kappa statistic does the
same for mu(A n T^k B) = kappa mu(A) mu(B) + (1 - kappa) mu(A n B).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from sklearn.linear_model import LinearRegression
from sklearn.metrics import r2_score

import config
from errors import ParameterError, require
from spectral.koopman import Observable, PermutationSystem

LOGGER = logging.getLogger(__name__)

CONDITIONING_FLOOR = 1e-12


@dataclass(frozen=True)
class WeakLimitFit:
    r: float
    residual: float
    r2: float
    pairs: int
    h: int
    tolerance: float

    @property
    def consistent(self) -> bool:
        """r inside (0, 1) with an acceptable relative residual."""
        return 0.0 < self.r < 1.0 and self.residual < self.tolerance

    def to_dict(self) -> dict[str, object]:
        return {
            "r": self.r,
            "residual": self.residual,
            "r2": self.r2,
            "pairs": self.pairs,
            "h": self.h,
            "tolerance": self.tolerance,
            "consistent": self.consistent,
        }


def _slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    model = LinearRegression(fit_intercept=False)
    model.fit(x.reshape(-1, 1), y)
    prediction = model.predict(x.reshape(-1, 1))
    residual = float(np.linalg.norm(y - prediction) / max(np.linalg.norm(y), CONDITIONING_FLOOR))
    r2 = float(r2_score(y, prediction)) if len(y) > 1 else float("nan")
    return float(model.coef_[0]), residual, r2


def fit_weak_limit(
    system: PermutationSystem,
    observables: Sequence[Observable],
    h: int,
    tolerance: float = config.WEAK_LIMIT_TOLERANCE,
) -> WeakLimitFit:
    """Fit r in U^{h+1} ~ r U + (1 - r) Id over all ordered observable pairs."""
    require(len(observables) >= 1, "the weak-limit fit needs at least one observable")
    require(h >= 1, f"tower height must be >= 1, got {h}")
    step = system.power(1)
    jump = system.power(h + 1)
    x, y = [], []
    for f in observables:
        once, far = f.values[step], f.values[jump]
        for g in observables:
            base = np.vdot(g.values, f.values).real / f.values.size
            x.append(np.vdot(g.values, once).real / f.values.size - base)
            y.append(np.vdot(g.values, far).real / f.values.size - base)
    x, y = np.array(x), np.array(y)
    if np.linalg.norm(x) < CONDITIONING_FLOOR:
        LOGGER.warning("Weak-limit fit is ill-conditioned: U barely moves the observables")
        raise ParameterError("observables are invariant under U; r is undetermined")
    r, residual, r2 = _slope(x, y)
    fit = WeakLimitFit(r, residual, r2, len(x), h, tolerance)
    if not fit.consistent:
        LOGGER.warning("Weak-limit fit r=%.4f residual=%.4f is outside the accepted range", r, residual)
    else:
        LOGGER.info("Weak-limit fit r=%.4f residual=%.4f over %d pairs", r, residual, len(x))
    return fit


@dataclass(frozen=True)
class KappaEstimate:
    kappa: float
    used: int
    excluded: int
    power: int

    def to_dict(self) -> dict[str, object]:
        return {"kappa": self.kappa, "used": self.used, "excluded": self.excluded, "power": self.power}


def kappa_statistic(
    system: PermutationSystem,
    pairs: Sequence[tuple[np.ndarray, np.ndarray]],
    power: int,
) -> KappaEstimate:
    """
    Least-squares kappa from set pairs (A, B) given as cell masks.

    Pairs with mu(A n B) = mu(A) mu(B) carry no information and are excluded.
    """
    image = system.power(power)
    n = system.n_cells
    x, y, excluded = [], [], 0
    for A, B in pairs:
        A = np.asarray(A, dtype=bool)
        B = np.asarray(B, dtype=bool)
        moved = np.zeros(n, dtype=bool)
        moved[image[B]] = True
        both = np.count_nonzero(A & B) / n
        denominator = both - (np.count_nonzero(A) / n) * (np.count_nonzero(B) / n)
        if abs(denominator) < CONDITIONING_FLOOR:
            excluded += 1
            continue
        x.append(denominator)
        y.append(both - np.count_nonzero(A & moved) / n)
    if excluded:
        LOGGER.warning("Excluded %d independent set pairs from the kappa statistic", excluded)
    if not x:
        raise ParameterError("every set pair is independent; kappa is undetermined")
    kappa, _, _ = _slope(np.array(x), np.array(y))
    return KappaEstimate(kappa, len(x), excluded, power)
