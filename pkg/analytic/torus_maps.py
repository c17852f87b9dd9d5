"""
Analytic torus diffeomorphisms as stacks of elementary steps.

Each step is either a slide x_t += sign * s~(x_s) by a mollified step function or a
rotation.  Maps act on lifts: an (n, d) array of real or complex points is sent
to x + f(x) without reduction mod 1, so displacements and strip norms are read
off directly.  Inverses are structural: reversed steps with negated signs.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

import config
from analytic.mollifier import MollifiedStep, mollify_step
from combinatorics.blockslide import BlockSlideMap, commutes_with_phi
from combinatorics.grid import GridSpec
from combinatorics.step_functions import StepFunction
from errors import MollificationError, ParameterError, require

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class AnalyticSlide:
    target: int
    source: int
    step: MollifiedStep
    sign: float = 1.0

    def apply(self, x: np.ndarray) -> np.ndarray:
        out = x.copy()
        out[:, self.target] = x[:, self.target] + self.sign * self.step(x[:, self.source])
        return out

    def inverse(self) -> "AnalyticSlide":
        return AnalyticSlide(self.target, self.source, self.step, -self.sign)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        n, d = x.shape
        jac = np.broadcast_to(np.eye(d, dtype=x.dtype), (n, d, d)).copy()
        jac[:, self.target, self.source] = self.sign * self.step.derivative(x[:, self.source])
        return jac

    def near_jump(self, x: np.ndarray) -> np.ndarray:
        return self.step.near_jump(x[:, self.source])


@dataclass(frozen=True, eq=False)
class AnalyticRotation:
    shift: tuple[float, ...]

    def apply(self, x: np.ndarray) -> np.ndarray:
        return x + np.asarray(self.shift, dtype=float)[None, :]

    def inverse(self) -> "AnalyticRotation":
        return AnalyticRotation(tuple(-s for s in self.shift))

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        n, d = x.shape
        return np.broadcast_to(np.eye(d, dtype=x.dtype), (n, d, d)).copy()

    def near_jump(self, x: np.ndarray) -> np.ndarray:
        return np.zeros(x.shape[0], dtype=bool)


Step = AnalyticSlide | AnalyticRotation


@dataclass(frozen=True, eq=False)
class AnalyticTorusMap:
    """Steps applied in sequence order (first step first)."""

    d: int
    steps: tuple[Step, ...] = ()
    label: str = ""

    @classmethod
    def identity(cls, d: int) -> "AnalyticTorusMap":
        return cls(d, (), "id")

    @classmethod
    def rotation(cls, d: int, beta: float | Fraction, axis: int = 0) -> "AnalyticTorusMap":
        shift = [0.0] * d
        shift[axis] = float(beta)
        return cls(d, (AnalyticRotation(tuple(shift)),), f"rot({beta})")

    def _points(self, points: np.ndarray) -> np.ndarray:
        x = np.asarray(points)
        x = x.astype(complex if np.iscomplexobj(x) else float)
        if x.ndim == 1:
            x = x.reshape(1, -1)
        require(x.shape[1] == self.d, f"expected points with {self.d} coordinates, got {x.shape[1]}")
        return x

    def __call__(self, points: np.ndarray) -> np.ndarray:
        x = self._points(points)
        for step in self.steps:
            x = step.apply(x)
        return x

    def then(self, other: "AnalyticTorusMap") -> "AnalyticTorusMap":
        """Apply ``self`` first, then ``other``."""
        require(self.d == other.d, "cannot chain maps of different dimension")
        return AnalyticTorusMap(self.d, self.steps + other.steps, f"{other.label}*{self.label}")

    def inverse(self) -> "AnalyticTorusMap":
        return AnalyticTorusMap(self.d, tuple(s.inverse() for s in reversed(self.steps)), f"{self.label}^-1")

    def displacement(self, points: np.ndarray) -> np.ndarray:
        x = self._points(points)
        return self(x) - x

    def jacobian(self, points: np.ndarray) -> np.ndarray:
        x = self._points(points)
        jac = np.broadcast_to(np.eye(self.d, dtype=x.dtype), (x.shape[0], self.d, self.d)).copy()
        for step in self.steps:
            jac = np.einsum("nij,njk->nik", step.jacobian(x), jac)
            x = step.apply(x)
        return jac

    def bad_mask(self, points: np.ndarray) -> np.ndarray:
        """Real points whose orbit through the steps passes within a jump neighbourhood."""
        x = self._points(points).real.copy()
        mask = np.zeros(x.shape[0], dtype=bool)
        for step in self.steps:
            mask |= step.near_jump(x)
            x = step.apply(x)
        return mask

    @property
    def n_slides(self) -> int:
        return sum(isinstance(s, AnalyticSlide) for s in self.steps)


def torus_gap(first: np.ndarray, second: np.ndarray) -> np.ndarray:
    """Coordinatewise distance on the circle, maximized over coordinates."""
    gap = np.mod(np.asarray(first, dtype=float) - np.asarray(second, dtype=float), 1.0)
    return np.minimum(gap, 1.0 - gap).max(axis=-1)


def _mollify(step: StepFunction, eps: float, delta: float, sigma_floor: float) -> MollifiedStep:
    try:
        return mollify_step(step, None, eps, delta, sigma_floor)
    except MollificationError as err:
        raise MollificationError(
            f"slide step with {len(step.jumps())} jumps cannot meet eps={eps:.3g}, delta={delta:.3g}",
            achievable_eps=err.achievable_eps,
            achievable_delta=err.achievable_delta,
        ) from err


def build_h_analytic(
    m: BlockSlideMap,
    q: int,
    eps: float,
    delta: float,
    grid: GridSpec | None = None,
    sigma_floor: float = config.SIGMA_FLOOR,
) -> AnalyticTorusMap:
    """
    Realize a block-slide map by mollified slides.

    The (eps, delta) budget is split evenly over the non-trivial slides, with half
    of delta reserved for overlaps of the jump neighbourhoods.  The accumulated
    error stays below the narrowest jump neighbourhood, so a point outside every
    neighbourhood never sees a slide jump between its exact and analytic orbit.
    """
    grid = m.natural_grid().refine_axis(0, q) if grid is None else grid
    if not commutes_with_phi(m.to_permutation(grid), q):
        raise ParameterError(f"block-slide map {m.label!r} does not commute with the 1/{q} rotation")
    active = [s for s in m.slides if not s.step.is_zero()]
    if not active:
        return AnalyticTorusMap(m.d, (), m.label)
    delta_k = delta / (2 * len(active))
    halfwidths = [delta_k / (2 * len(s.step.jumps())) for s in active if s.step.jumps()]
    eps_k = min([eps] + halfwidths) / len(active)
    steps = tuple(
        AnalyticSlide(s.target, s.source, _mollify(s.step, eps_k, delta_k, sigma_floor))
        for s in active
    )
    LOGGER.debug("analytic %s: %d slides, eps/slide=%.3g", m.label, len(steps), eps_k)
    return AnalyticTorusMap(m.d, steps, m.label)


@dataclass(frozen=True)
class ClosenessReport:
    samples: int
    eps: float
    delta: float
    max_error_outside: float
    bad_fraction: float
    commutation_residual: float

    @property
    def passed(self) -> bool:
        return self.max_error_outside < self.eps and self.bad_fraction < self.delta

    def to_dict(self) -> dict[str, object]:
        return {
            "samples": self.samples,
            "eps": self.eps,
            "delta": self.delta,
            "max_error_outside": self.max_error_outside,
            "bad_fraction": self.bad_fraction,
            "commutation_residual": self.commutation_residual,
            "passed": self.passed,
        }


def closeness_samples(
    h: AnalyticTorusMap,
    m: BlockSlideMap,
    samples: int = config.SAMPLES,
    seed: int = config.RANDOM_SEED,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Sample points, the torus distance |h(x) - m(x)| and whether x meets a jump neighbourhood."""
    x = np.random.default_rng(seed).random((samples, h.d))
    return x, torus_gap(h(x), m.apply_array(x)), h.bad_mask(x)


def closeness_report(
    h: AnalyticTorusMap,
    m: BlockSlideMap,
    eps: float,
    delta: float,
    q: int = 1,
    samples: int = config.SAMPLES,
    seed: int = config.RANDOM_SEED,
) -> ClosenessReport:
    """Sampled (eps, delta) closeness of ``h`` to ``m`` and the residual of commuting with phi^(1/q)."""
    x, error, bad = closeness_samples(h, m, samples, seed)
    outside = error[~bad]
    shift = np.zeros(h.d)
    shift[0] = 1.0 / q
    commutation = np.abs(h(x + shift) - (h(x) + shift)).max() if samples else 0.0
    return ClosenessReport(
        samples=samples,
        eps=eps,
        delta=delta,
        max_error_outside=float(outside.max()) if outside.size else 0.0,
        bad_fraction=float(bad.mean()) if samples else 0.0,
        commutation_residual=float(commutation),
    )


def stack(maps: Sequence[AnalyticTorusMap], d: int) -> AnalyticTorusMap:
    """Chain maps, the first in ``maps`` acting first."""
    result = AnalyticTorusMap.identity(d)
    for item in maps:
        result = result.then(item)
    return result
