"""
Rational grids on the torus and exact permutations of their cells.

A grid cell is the half-open box prod_i [j_i / N_i, (j_i + 1) / N_i).  Cells are
numbered in C order with x_1 as the most significant axis.  A ``CellPermutation``
moves every cell by a translation onto its image cell, so it acts exactly on
points and boxes, and it lifts to any refining grid.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
import pandas as pd

from errors import IncompatibleGridError, ParameterError, require

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class GridSpec:
    """Product grid with x_1 denominator and denominators for x_2..x_d."""

    d: int
    x1_denominator: int
    side_denominators: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "side_denominators", tuple(int(s) for s in self.side_denominators))
        require(self.d >= 1, f"grid dimension must be >= 1, got {self.d}")
        require(
            len(self.side_denominators) == self.d - 1,
            f"expected {self.d - 1} side denominators, got {len(self.side_denominators)}",
        )
        require(
            self.x1_denominator >= 1 and all(s >= 1 for s in self.side_denominators),
            f"grid denominators must be >= 1, got {self.shape}",
        )

    @classmethod
    def from_shape(cls, shape: Sequence[int]) -> "GridSpec":
        shape = tuple(int(s) for s in shape)
        return cls(d=len(shape), x1_denominator=shape[0], side_denominators=shape[1:])

    @classmethod
    def trivial(cls, d: int) -> "GridSpec":
        return cls.from_shape((1,) * d)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.x1_denominator, *self.side_denominators)

    @property
    def n_cells(self) -> int:
        return math.prod(self.shape)

    @property
    def cell_volume(self) -> Fraction:
        return Fraction(1, self.n_cells)

    def lcm(self, other: "GridSpec") -> "GridSpec":
        require(self.d == other.d, f"cannot combine grids of dimension {self.d} and {other.d}")
        return GridSpec.from_shape(math.lcm(a, b) for a, b in zip(self.shape, other.shape))

    def refine_axis(self, axis: int, multiple: int) -> "GridSpec":
        shape = list(self.shape)
        shape[axis] = math.lcm(shape[axis], multiple)
        return GridSpec.from_shape(shape)

    def refines(self, other: "GridSpec") -> bool:
        return self.d == other.d and all(a % b == 0 for a, b in zip(self.shape, other.shape))

    def cell_of(self, point: Sequence[Fraction]) -> int:
        require(len(point) == self.d, f"point has {len(point)} coordinates, grid has {self.d}")
        index = tuple(
            math.floor((Fraction(x) - math.floor(Fraction(x))) * n) for x, n in zip(point, self.shape)
        )
        return int(np.ravel_multi_index(index, self.shape))

    def cell_index(self, cell: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(cell, self.shape))

    def cell_box(self, cell: int) -> "Box":
        index = self.cell_index(cell)
        return Box(
            lo=tuple(Fraction(i, n) for i, n in zip(index, self.shape)),
            hi=tuple(Fraction(i + 1, n) for i, n in zip(index, self.shape)),
        )

    def unravel_all(self) -> tuple[np.ndarray, ...]:
        return np.unravel_index(np.arange(self.n_cells, dtype=np.int64), self.shape)

    def cells_in_box(self, box: "Box") -> Iterator[tuple[int, ...]]:
        """Multi-indices of cells meeting the interior of ``box``."""
        ranges = []
        for lo, hi, n in zip(box.lo, box.hi, self.shape):
            first = math.floor(lo * n)
            last = math.ceil(hi * n) - 1
            ranges.append(range(first, max(first, last) + 1))
        return itertools.product(*ranges)


@dataclass(frozen=True)
class Box:
    """Half-open box with exact rational corners inside [0, 1]^d."""

    lo: tuple[Fraction, ...]
    hi: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "lo", tuple(Fraction(x) for x in self.lo))
        object.__setattr__(self, "hi", tuple(Fraction(x) for x in self.hi))
        require(len(self.lo) == len(self.hi), "box corners differ in dimension")

    @property
    def d(self) -> int:
        return len(self.lo)

    @property
    def volume(self) -> Fraction:
        return math.prod((h - l for l, h in zip(self.lo, self.hi)), start=Fraction(1))

    @property
    def is_empty(self) -> bool:
        return any(h <= l for l, h in zip(self.lo, self.hi))

    def contains(self, point: Sequence[Fraction]) -> bool:
        return all(l <= Fraction(x) < h for x, l, h in zip(point, self.lo, self.hi))

    def intersection(self, other: "Box") -> "Box | None":
        lo = tuple(max(a, b) for a, b in zip(self.lo, other.lo))
        hi = tuple(min(a, b) for a, b in zip(self.hi, other.hi))
        box = Box(lo, hi)
        return None if box.is_empty else box

    def translate(self, shift: Sequence[Fraction]) -> "Box":
        return Box(
            tuple(l + s for l, s in zip(self.lo, shift)),
            tuple(h + s for h, s in zip(self.hi, shift)),
        )

    def as_row(self) -> dict[str, str]:
        row: dict[str, str] = {}
        for axis, (lo, hi) in enumerate(zip(self.lo, self.hi), start=1):
            row[f"lo_{axis}"] = str(lo)
            row[f"hi_{axis}"] = str(hi)
        return row


def _check_bijection(image: np.ndarray, n_cells: int) -> None:
    if image.shape != (n_cells,):
        raise ParameterError(f"image array has shape {image.shape}, expected ({n_cells},)")
    if n_cells and (image.min() < 0 or image.max() >= n_cells):
        raise ParameterError("image array points outside the grid")
    counts = np.bincount(image, minlength=n_cells)
    if not np.all(counts == 1):
        raise ParameterError(
            f"cell map is not a bijection: {int(np.count_nonzero(counts == 0))} cells have no preimage"
        )


@dataclass(frozen=True, eq=False)
class CellPermutation:
    """Exact permutation of grid cells acting by translation on each cell."""

    grid: GridSpec
    image: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        image = np.ascontiguousarray(self.image, dtype=np.int64)
        _check_bijection(image, self.grid.n_cells)
        image.setflags(write=False)
        object.__setattr__(self, "image", image)

    @classmethod
    def identity(cls, grid: GridSpec, label: str = "id") -> "CellPermutation":
        return cls(grid, np.arange(grid.n_cells, dtype=np.int64), label)

    @classmethod
    def rotation(
        cls, grid: GridSpec, beta: Fraction, axis: int = 0, label: str = ""
    ) -> "CellPermutation":
        """Translation by ``beta`` along ``axis``; ``beta * N_axis`` must be an integer."""
        beta = Fraction(beta)
        n_axis = grid.shape[axis]
        steps = beta * n_axis
        if steps.denominator != 1:
            raise IncompatibleGridError(
                f"rotation by {beta} does not permute cells of width 1/{n_axis} along x_{axis + 1}"
            )
        shift = int(steps) % n_axis
        if axis == 0:
            stride = grid.n_cells // n_axis
            image = (np.arange(grid.n_cells, dtype=np.int64) + shift * stride) % grid.n_cells
        else:
            index = list(grid.unravel_all())
            index[axis] = (index[axis] + shift) % n_axis
            image = np.ravel_multi_index(tuple(index), grid.shape)
        return cls(grid, image, label or f"rot({beta})")

    @property
    def n_cells(self) -> int:
        return self.grid.n_cells

    def on(self, grid: GridSpec) -> "CellPermutation":
        """The same map on a refining grid."""
        if grid == self.grid:
            return self
        if not grid.refines(self.grid):
            raise IncompatibleGridError(f"grid {grid.shape} does not refine {self.grid.shape}")
        factors = [a // b for a, b in zip(grid.shape, self.grid.shape)]
        fine = grid.unravel_all()
        coarse = np.ravel_multi_index(tuple(a // f for a, f in zip(fine, factors)), self.grid.shape)
        target = np.unravel_index(self.image[coarse], self.grid.shape)
        lifted = np.ravel_multi_index(
            tuple(t * f + a % f for t, a, f in zip(target, fine, factors)), grid.shape
        )
        return CellPermutation(grid, lifted, self.label)

    def compose(self, other: "CellPermutation") -> "CellPermutation":
        """``self`` after ``other``."""
        common = self.grid.lcm(other.grid)
        outer = self.on(common).image
        inner = other.on(common).image
        return CellPermutation(common, outer[inner], f"{self.label}*{other.label}")

    def inverse(self) -> "CellPermutation":
        inv = np.empty_like(self.image)
        inv[self.image] = np.arange(self.n_cells, dtype=np.int64)
        return CellPermutation(self.grid, inv, f"{self.label}^-1")

    def power(self, k: int) -> "CellPermutation":
        base = self if k >= 0 else self.inverse()
        label = f"{self.label}^{k}"
        k = abs(k)
        result = np.arange(self.n_cells, dtype=np.int64)
        step = base.image.copy()
        while k:
            if k & 1:
                result = step[result]
            step = step[step]
            k >>= 1
        return CellPermutation(self.grid, result, label)

    def is_identity(self) -> bool:
        return bool(np.array_equal(self.image, np.arange(self.n_cells, dtype=np.int64)))

    def equals(self, other: "CellPermutation") -> bool:
        common = self.grid.lcm(other.grid)
        return bool(np.array_equal(self.on(common).image, other.on(common).image))

    def cycle_lengths(self) -> np.ndarray:
        """Length of the cycle through each cell."""
        n = self.n_cells
        if n == 0:
            return np.zeros(0, dtype=np.int64)
        rep = np.arange(n, dtype=np.int64)
        jump = self.image.copy()
        for _ in range(max(1, math.ceil(math.log2(n))) + 1):
            rep = np.minimum(rep, rep[jump])
            jump = jump[jump]
        _, inverse, counts = np.unique(rep, return_inverse=True, return_counts=True)
        return counts[inverse]

    def order(self) -> int:
        return math.lcm(*(int(c) for c in np.unique(self.cycle_lengths())))

    def apply_point(self, point: Sequence[Fraction]) -> tuple[Fraction, ...]:
        point = tuple(Fraction(x) - math.floor(Fraction(x)) for x in point)
        cell = self.grid.cell_of(point)
        source = self.grid.cell_box(cell)
        target = self.grid.cell_box(int(self.image[cell]))
        return tuple(x - a + b for x, a, b in zip(point, source.lo, target.lo))

    def apply_array(self, points: np.ndarray) -> np.ndarray:
        """Floating-point image of an (n, d) array of points, reduced mod 1."""
        x = np.mod(np.atleast_2d(np.asarray(points, dtype=float)), 1.0)
        shape = np.array(self.grid.shape)
        index = np.minimum(np.floor(x * shape).astype(np.int64), shape - 1)
        cells = np.ravel_multi_index(tuple(index.T), self.grid.shape)
        target = np.stack(np.unravel_index(self.image[cells], self.grid.shape), axis=1)
        return np.mod(x + (target - index) / shape, 1.0)

    def apply_box(self, box: Box) -> list[Box]:
        """Image of ``box`` as the translated pieces it is cut into by the grid."""
        pieces = []
        for index in self.grid.cells_in_box(box):
            cell = int(np.ravel_multi_index(index, self.grid.shape))
            source = self.grid.cell_box(cell)
            piece = box.intersection(source)
            if piece is None:
                continue
            target = self.grid.cell_box(int(self.image[cell]))
            pieces.append(piece.translate(tuple(b - a for a, b in zip(source.lo, target.lo))))
        return pieces

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame({"cell": np.arange(self.n_cells), "image": self.image})

    def write_csv(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        self.frame().to_csv(path, index=False)
