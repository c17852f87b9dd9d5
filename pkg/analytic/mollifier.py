"""
Entire 1/N-periodic approximations of step functions.

The step is convolved with a Gaussian of width sigma and periodized:

    s~(z) = sum_pieces sum_n v/2 [erf((z - a - n/N)/(sigma sqrt2)) - erf((z - b - n/N)/(sigma sqrt2))]

Re z is first reduced into [0, 1/N), so the truncated series is exactly 1/N-periodic.
The series is truncated where both error functions agree to within the tail
tolerance on the strip |Im z| <= rho.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import erf, erfc, erfcinv

import config
from combinatorics.step_functions import StepFunction
from errors import MollificationError, ParameterError, require

LOGGER = logging.getLogger(__name__)

SQRT2 = math.sqrt(2.0)
SQRT2PI = math.sqrt(2.0 * math.pi)
OVERFLOW_REACH = math.sqrt(1400.0)  # |Im z| / sigma past which exp(Im^2 / 2 sigma^2) overflows


@dataclass(frozen=True, eq=False)
class MollifiedStep:
    """Heat-kernel smoothing of ``base`` with period 1/n and width ``sigma``."""

    base: StepFunction
    n: int
    sigma: float
    bad_halfwidth: float = 0.0
    pieces: np.ndarray = field(init=False, repr=False)
    jump_positions: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        require(self.n >= 1, f"period denominator must be >= 1, got {self.n}")
        require(self.sigma > 0, f"sigma must be positive, got {self.sigma}")
        if self.base.is_constant:
            pieces = np.zeros((0, 3))
        else:
            pieces = np.array(
                [(float(a), float(b), float(v)) for a, b, v in self.base.period_pieces(self.n) if v != 0]
            ).reshape(-1, 3)
        object.__setattr__(self, "pieces", pieces)
        object.__setattr__(
            self, "jump_positions", np.array([float(pos) for pos, _ in self.base.jumps()])
        )

    @property
    def constant(self) -> float | None:
        return float(self.base.values[0]) if self.base.is_constant else None

    def truncation(self, max_imag: float) -> int:
        """Number of neighbouring periods summed on each side."""
        reach = math.sqrt(max_imag**2 + 80.0 * self.sigma**2)
        return int(math.ceil(self.n * (reach + 1.0 / self.n))) + 1

    def _evaluate(self, z: np.ndarray, kernel: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
        """Apply ``kernel`` to reduced offsets; points past the overflow reach come back as NaN."""
        z = np.asarray(z)
        flat = z.reshape(-1)
        out = np.full(flat.shape, np.nan, dtype=complex if np.iscomplexobj(z) else float)
        ok = np.isfinite(flat) & (np.abs(flat.imag) <= self.sigma * OVERFLOW_REACH)
        if ok.any():
            inside = flat[ok]
            shift = np.floor(inside.real * self.n) / self.n
            reach = self.truncation(float(np.abs(inside.imag).max()))
            offsets = np.arange(-reach, reach + 1) / self.n
            out[ok] = kernel((inside - shift)[:, None] - offsets[None, :])
        return out.reshape(z.shape)

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z)
        if self.constant is not None:
            return np.full(z.shape, self.constant, dtype=z.dtype if np.iscomplexobj(z) else float)
        scale = self.sigma * SQRT2

        def kernel(w: np.ndarray) -> np.ndarray:
            total = np.zeros(w.shape[0], dtype=w.dtype)
            for a, b, v in self.pieces:
                total += 0.5 * v * (erf((w - a) / scale) - erf((w - b) / scale)).sum(axis=1)
            return total

        return self._evaluate(z, kernel)

    def derivative(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z)
        if self.constant is not None:
            return np.zeros(z.shape, dtype=z.dtype if np.iscomplexobj(z) else float)
        two_var = 2.0 * self.sigma**2

        def kernel(w: np.ndarray) -> np.ndarray:
            total = np.zeros(w.shape[0], dtype=w.dtype)
            for a, b, v in self.pieces:
                bumps = np.exp(-((w - a) ** 2) / two_var) - np.exp(-((w - b) ** 2) / two_var)
                total += v * bumps.sum(axis=1) / (self.sigma * SQRT2PI)
            return total

        return self._evaluate(z, kernel)

    def near_jump(self, x: np.ndarray) -> np.ndarray:
        """Real points within ``bad_halfwidth`` of a jump of the base step."""
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        if self.jump_positions.size == 0 or self.bad_halfwidth <= 0:
            return np.zeros(x.shape, dtype=bool)
        gap = np.abs(x[..., None] - self.jump_positions)
        gap = np.minimum(gap, 1.0 - gap)
        return np.any(gap < self.bad_halfwidth, axis=-1)

    def bad_measure(self) -> float:
        return min(1.0, 2.0 * self.bad_halfwidth * self.jump_positions.size)


def mollify_step(
    s: StepFunction, n: int | None, eps: float, delta: float, sigma_floor: float = config.SIGMA_FLOOR
) -> MollifiedStep:
    """
    Approximant within ``eps`` of ``s`` outside jump neighbourhoods of total measure ``delta``.

    Raises ``MollificationError`` when the needed width falls below ``sigma_floor``.
    """
    require(0 < eps < 1 and 0 < delta < 1, f"eps and delta must lie in (0, 1), got {eps}, {delta}")
    period = s.period_denominator()
    n = period if n is None else n
    if period % n:
        raise ParameterError(f"step with period 1/{period} is not 1/{n}-periodic")
    jumps = s.jumps()
    if not jumps:
        return MollifiedStep(s, n, sigma=1.0)
    halfwidth = delta / (2.0 * len(jumps))
    variation = float(s.total_variation)
    ratio = min(eps / variation, 0.5)
    sigma = halfwidth / (SQRT2 * float(erfcinv(ratio)))
    if sigma < sigma_floor:
        achievable = variation * float(erfc(halfwidth / (sigma_floor * SQRT2)))
        raise MollificationError(
            f"mollifier width {sigma:.3g} is below the floor {sigma_floor:.3g}",
            achievable_eps=max(achievable, eps),
            achievable_delta=delta,
        )
    LOGGER.debug("mollified step with %d jumps: N=%d sigma=%.3g", len(jumps), n, sigma)
    return MollifiedStep(s, n, sigma=sigma, bad_halfwidth=halfwidth)
