"""
Spectral density estimates from correlation sequences.

The Fejer-weighted sum F(theta) = sum_{|k| <= K} (1 - |k| / (K + 1)) c_k e^{-i k theta}
is non-negative for a positive-definite sequence and integrates to c_0 = ||f||^2.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
import pandas as pd

import config
from errors import ParameterError, require
from spectral.koopman import KoopmanCorrelations

LOGGER = logging.getLogger(__name__)

MEAN_TOLERANCE = 1e-10


@dataclass(frozen=True)
class SpectralDensity:
    label: str
    theta: np.ndarray
    density: np.ndarray
    window: int

    @property
    def mass(self) -> float:
        """Integral against d theta / 2 pi."""
        return float(self.density.mean())

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame({"theta": self.theta, "density": self.density})


def spectral_measure_estimate(corr: KoopmanCorrelations, n_points: int | None = None) -> SpectralDensity:
    """Fejer density of the spectral measure of a mean-zero observable, on M >= 2K + 1 angles."""
    if abs(corr.mean) > MEAN_TOLERANCE:
        raise ParameterError(f"{corr.label} has mean {corr.mean:.3e}; spectral estimates need mean-zero observables")
    K = corr.max_lag
    M = 2 * K + 1 if n_points is None else n_points
    require(M >= 2 * K + 1, f"need at least {2 * K + 1} angles for {K} lags, got {M}")
    if K < config.FEJER_MIN_WINDOW:
        LOGGER.warning("Fejer window of %d lags is short; the density is heavily smoothed", K)

    weights = 1.0 - np.arange(K + 1) / (K + 1)
    coefficients = np.zeros(M, dtype=complex)
    coefficients[: K + 1] = weights * corr.values
    if K:
        coefficients[M - K :] = (weights[1:] * np.conj(corr.values[1:]))[::-1]
    density = np.fft.fft(coefficients).real
    theta = 2 * np.pi * np.arange(M) / M
    return SpectralDensity(corr.label, theta, density, K)
