"""
Exact right-continuous step functions on the circle.
"""

from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from errors import IncompatibleGridError, ParameterError, as_fraction, require


@dataclass(frozen=True)
class StepFunction:
    """Value ``values[i]`` on ``[breakpoints[i], breakpoints[i+1])``, the last piece ending at 1."""

    breakpoints: tuple[Fraction, ...]
    values: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        bps = tuple(as_fraction(b) for b in self.breakpoints)
        vals = tuple(as_fraction(v) for v in self.values)
        require(len(bps) == len(vals) and len(bps) > 0, "breakpoints and values must be non-empty and aligned")
        require(bps[0] == 0, f"first breakpoint must be 0, got {bps[0]}")
        require(all(a < b for a, b in zip(bps, bps[1:])) and bps[-1] < 1,
                "breakpoints must increase strictly inside [0, 1)")
        object.__setattr__(self, "breakpoints", bps)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value: Fraction | int = 0) -> "StepFunction":
        return cls((Fraction(0),), (as_fraction(value),))

    @classmethod
    def from_cells(cls, values: Sequence[Fraction | int], n: int) -> "StepFunction":
        """Value ``values[j]`` on [j/n, (j+1)/n)."""
        require(len(values) == n, f"expected {n} cell values, got {len(values)}")
        return cls(tuple(Fraction(j, n) for j in range(n)), tuple(values)).simplified()

    def simplified(self) -> "StepFunction":
        bps, vals = [self.breakpoints[0]], [self.values[0]]
        for b, v in zip(self.breakpoints[1:], self.values[1:]):
            if v != vals[-1]:
                bps.append(b)
                vals.append(v)
        return StepFunction(tuple(bps), tuple(vals))

    def __call__(self, x: Fraction) -> Fraction:
        x = as_fraction(x)
        x -= math.floor(x)
        return self.values[bisect.bisect_right(self.breakpoints, x) - 1]

    def __neg__(self) -> "StepFunction":
        return StepFunction(self.breakpoints, tuple(-v for v in self.values))

    def evaluate_array(self, x: np.ndarray) -> np.ndarray:
        x = np.mod(np.asarray(x, dtype=float), 1.0)
        index = np.searchsorted(np.array([float(b) for b in self.breakpoints]), x, side="right") - 1
        return np.array([float(v) for v in self.values])[index]

    @property
    def is_constant(self) -> bool:
        return len(set(self.values)) == 1

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.values)

    @property
    def breakpoint_denominator(self) -> int:
        return math.lcm(*(b.denominator for b in self.breakpoints))

    @property
    def value_denominator(self) -> int:
        return math.lcm(*(v.denominator for v in self.values))

    def jumps(self) -> list[tuple[Fraction, Fraction]]:
        """(position, jump size) at every discontinuity in [0, 1), including the wrap at 0."""
        s = self.simplified()
        result = []
        if s.values[0] != s.values[-1]:
            result.append((Fraction(0), s.values[0] - s.values[-1]))
        for b, prev, cur in zip(s.breakpoints[1:], s.values, s.values[1:]):
            result.append((b, cur - prev))
        return result

    @property
    def total_variation(self) -> Fraction:
        return sum((abs(size) for _, size in self.jumps()), Fraction(0))

    def cell_values(self, n: int) -> list[Fraction]:
        if n % self.breakpoint_denominator:
            raise IncompatibleGridError(
                f"step with breakpoint denominator {self.breakpoint_denominator} is not constant on 1/{n} cells"
            )
        return [self(Fraction(j, n)) for j in range(n)]

    def period_denominator(self) -> int:
        """Largest N with s(x + 1/N) = s(x)."""
        if self.is_constant:
            return 1
        base = self.breakpoint_denominator
        cells = self.cell_values(base)
        for n in sorted((n for n in range(1, base + 1) if base % n == 0), reverse=True):
            shift = base // n
            if all(cells[(j + shift) % base] == cells[j] for j in range(base)):
                return n
        return 1

    def period_pieces(self, n: int) -> list[tuple[Fraction, Fraction, Fraction]]:
        """Pieces (a, b, value) covering one period [0, 1/n)."""
        end = Fraction(1, n)
        if self(end) != self(0) and n > 1:
            raise ParameterError(f"step is not 1/{n}-periodic")
        bps = [b for b in self.breakpoints if b < end] + [end]
        return [(a, b, self(a)) for a, b in zip(bps, bps[1:])]

    def shifts_on_grid(self, n_source: int, n_target: int) -> np.ndarray:
        """Integer translation, in target cells, for every source cell."""
        values = self.cell_values(n_source)
        shifts = [v * n_target for v in values]
        if any(s.denominator != 1 for s in shifts):
            raise IncompatibleGridError(
                f"step values with denominator {self.value_denominator} do not move 1/{n_target} cells onto cells"
            )
        return np.array([int(s) for s in shifts], dtype=np.int64)
