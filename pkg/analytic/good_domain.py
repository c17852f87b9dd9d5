"""
Good domain of a stage conjugator: the delta-inset union of the A-block grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from combinatorics.grid import Box, GridSpec
from core.params import StageParams
from errors import as_fraction, require


@dataclass(frozen=True)
class GoodDomain:
    l: int
    q: int
    delta: Fraction
    d: int = 2

    def __post_init__(self) -> None:
        object.__setattr__(self, "delta", as_fraction(self.delta))
        require(self.l >= 1 and self.q >= 1, f"l and q must be positive, got l={self.l}, q={self.q}")
        require(0 <= self.delta < Fraction(1, 2), f"inset must lie in [0, 1/2), got {self.delta}")
        require(self.d >= 2, f"dimension must be at least 2, got {self.d}")

    @classmethod
    def from_stage(cls, stage: StageParams) -> "GoodDomain":
        return cls(stage.l, stage.q, stage.delta, stage.d)

    @property
    def block_grid(self) -> GridSpec:
        """Blocks of x1-width 1/(2 l^d q^2), x2-width 1/(2l) and width 1/l beyond."""
        return GridSpec.from_shape(
            (2 * self.l**self.d * self.q**2, 2 * self.l) + (self.l,) * (self.d - 2)
        )

    @property
    def measure(self) -> Fraction:
        return (1 - 2 * self.delta) ** self.d

    @property
    def exceptional_measure(self) -> Fraction:
        """mu(E_n), the complement of the insets."""
        return 1 - self.measure

    @property
    def exceptional_widths(self) -> tuple[Fraction, ...]:
        """Thickness of the exceptional slabs across each axis."""
        return tuple(2 * self.delta / side for side in self.block_grid.shape)

    def _good_length_below(self, x: Fraction, blocks: int) -> Fraction:
        scaled = x * blocks
        whole = math.floor(scaled)
        part = min(max(scaled - whole - self.delta, Fraction(0)), 1 - 2 * self.delta)
        return (whole * (1 - 2 * self.delta) + part) / blocks

    def axis_overlap(self, axis: int, lo: Fraction, hi: Fraction) -> Fraction:
        """Exact length of [lo, hi] inside the insets along one axis."""
        require(lo <= hi, f"interval [{lo}, {hi}] is reversed")
        blocks = self.block_grid.shape[axis]
        return self._good_length_below(Fraction(hi), blocks) - self._good_length_below(Fraction(lo), blocks)

    def box_overlap(self, box: Box) -> Fraction:
        """mu(box intersected with the good domain)."""
        result = Fraction(1)
        for axis, (lo, hi) in enumerate(zip(box.lo, box.hi)):
            result *= self.axis_overlap(axis, lo, hi)
        return result

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership of an (n, d) array of real points, reduced mod 1."""
        x = np.mod(np.atleast_2d(np.asarray(points, dtype=float)), 1.0)
        scaled = x * np.array(self.block_grid.shape, dtype=float)[None, :]
        offset = scaled - np.floor(scaled)
        delta = float(self.delta)
        return np.all((offset >= delta) & (offset <= 1.0 - delta), axis=1)

    def inset(self, cell: int) -> Box:
        """The good part of one block."""
        box = self.block_grid.cell_box(cell)
        widths = [hi - lo for lo, hi in zip(box.lo, box.hi)]
        return Box(
            tuple(lo + self.delta * w for lo, w in zip(box.lo, widths)),
            tuple(hi - self.delta * w for hi, w in zip(box.hi, widths)),
        )

    def sampled_measure(self, samples: int, seed: int) -> float:
        x = np.random.default_rng(seed).random((samples, self.d))
        return float(self.contains(x).mean())
