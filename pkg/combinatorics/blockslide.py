"""
Block-slide maps: compositions of coordinate translations by step functions.

A slide moves x_target by s(x_source).  On a grid where s is constant along the
source cells and its values are whole target cells, a slide is a permutation of
cells, so every block-slide map is handled as an exact ``CellPermutation``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from combinatorics.grid import CellPermutation, GridSpec
from combinatorics.partitions import PartitionFamily
from combinatorics.step_functions import StepFunction
from errors import IncompatibleGridError, ParameterError, require

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True)
class ElementarySlide:
    """x_target += step(x_source); axes are 0-based."""

    target: int
    source: int
    step: StepFunction

    def __post_init__(self) -> None:
        require(self.target != self.source,
                f"a slide needs distinct axes, got target=source={self.target}")

    def inverse(self) -> "ElementarySlide":
        return ElementarySlide(self.target, self.source, -self.step)

    def apply_point(self, point: list[Fraction]) -> None:
        shifted = point[self.target] + self.step(point[self.source])
        point[self.target] = shifted - math.floor(shifted)


@dataclass(frozen=True)
class BlockSlideMap:
    """Slides applied in sequence order (first slide first)."""

    d: int
    slides: tuple[ElementarySlide, ...] = ()
    label: str = ""

    def __post_init__(self) -> None:
        for slide in self.slides:
            require(0 <= slide.target < self.d and 0 <= slide.source < self.d,
                    f"slide axes ({slide.target}, {slide.source}) outside dimension {self.d}")

    def then(self, other: "BlockSlideMap") -> "BlockSlideMap":
        """Apply ``self`` first, then ``other``."""
        require(self.d == other.d, "cannot chain maps of different dimension")
        return BlockSlideMap(self.d, self.slides + other.slides, f"{other.label}*{self.label}")

    def inverse(self) -> "BlockSlideMap":
        return BlockSlideMap(
            self.d, tuple(s.inverse() for s in reversed(self.slides)), f"{self.label}^-1"
        )

    def apply_point(self, point: Sequence[Fraction]) -> tuple[Fraction, ...]:
        x = [Fraction(v) - math.floor(Fraction(v)) for v in point]
        for slide in self.slides:
            slide.apply_point(x)
        return tuple(x)

    def apply_array(self, points: np.ndarray) -> np.ndarray:
        """Floating-point image of an (n, d) array of points, reduced mod 1."""
        x = np.mod(np.array(points, dtype=float), 1.0)
        for slide in self.slides:
            x[:, slide.target] = np.mod(x[:, slide.target] + slide.step.evaluate_array(x[:, slide.source]), 1.0)
        return x

    def natural_grid(self) -> GridSpec:
        """Coarsest grid on which every slide permutes cells."""
        shape = [1] * self.d
        for slide in self.slides:
            shape[slide.source] = math.lcm(shape[slide.source], slide.step.breakpoint_denominator)
            shape[slide.target] = math.lcm(shape[slide.target], slide.step.value_denominator)
        return GridSpec.from_shape(shape)

    def to_permutation(self, grid: GridSpec | None = None) -> CellPermutation:
        grid = self.natural_grid() if grid is None else grid
        if not grid.refines(self.natural_grid()):
            raise IncompatibleGridError(
                f"grid {grid.shape} does not refine the slide grid {self.natural_grid().shape}"
            )
        index = [axis.copy() for axis in grid.unravel_all()]
        for slide in self.slides:
            shifts = slide.step.shifts_on_grid(grid.shape[slide.source], grid.shape[slide.target])
            index[slide.target] = (index[slide.target] + shifts[index[slide.source]]) % grid.shape[slide.target]
        image = np.ravel_multi_index(tuple(index), grid.shape)
        return CellPermutation(grid, image, self.label)


def _check_coordinate(i: int, d: int, low: int = 2) -> None:
    if not low <= i <= d:
        raise ParameterError(f"coordinate index must satisfy {low} <= i <= d={d}, got i={i}")


def build_psi(kind: int, i: int, l: int, q: int, d: int, modified: bool = False) -> StepFunction:
    """
    The step functions psi^(1), psi^(2), psi^(3) for coordinate i (1-based).

    psi^(1) and psi^(3) are functions of x_i on 1/l cells, psi^(2) of x_1 on
    1/(l^(d+2-i) q) cells; ``modified`` selects the x_1 function on 1/(2 l^d q^2)
    cells used for i >= 3.
    """
    _check_coordinate(i, d)
    require(l >= 1 and q >= 1, f"l and q must be positive, got l={l}, q={q}")
    scale = l ** (d + 2 - i) * q
    if kind == 1:
        return StepFunction.from_cells([Fraction(l - j, scale) if j else Fraction(0) for j in range(l)], l)
    if kind == 3:
        return StepFunction.from_cells([Fraction(j, scale) for j in range(l)], l)
    if kind != 2:
        raise ParameterError(f"psi kind must be 1, 2 or 3, got {kind}")
    if not modified:
        return StepFunction.from_cells([Fraction(j % l, l) for j in range(scale)], scale)
    _check_coordinate(i, d, low=3)
    n = 2 * l**d * q * q
    inner, outer = 2 * l ** (i - 2) * q, 2 * l ** (i - 1) * q
    return StepFunction.from_cells([Fraction(j // inner - (j // outer) * l, l) for j in range(n)], n)


def build_g(i: int, l: int, q: int, d: int, modified: bool | None = None) -> BlockSlideMap:
    """g_{i,l,q}: slide x_1 by psi^(1)(x_i), then x_i by psi^(2)(x_1), then x_1 by -psi^(3)(x_i)."""
    _check_coordinate(i, d)
    modified = i >= 3 if modified is None else modified
    axis = i - 1
    return BlockSlideMap(
        d,
        (
            ElementarySlide(0, axis, build_psi(1, i, l, q, d)),
            ElementarySlide(axis, 0, build_psi(2, i, l, q, d, modified=modified)),
            ElementarySlide(0, axis, -build_psi(3, i, l, q, d)),
        ),
        f"g_{i}",
    )


def compose_g(l: int, q: int, d: int, modified: bool = False, down_to: int = 2) -> BlockSlideMap:
    """g_{down_to} o ... o g_d: g_d acts first."""
    require(2 <= down_to <= d, f"composition must stop at 2 <= i <= d, got {down_to}")
    slides: tuple[ElementarySlide, ...] = ()
    for i in range(d, down_to - 1, -1):
        slides += build_g(i, l, q, d, modified=modified and i >= 3).slides
    return BlockSlideMap(d, slides, f"g[{down_to}..{d}]")


def commutes_with_phi(m: CellPermutation, q: int) -> bool:
    """Exact test of m o phi^(1/q) = phi^(1/q) o m."""
    rotation = CellPermutation.rotation(m.grid, Fraction(1, q))
    return bool(np.array_equal(m.image[rotation.image], rotation.image[m.image]))


def maps_partition(
    m: CellPermutation | BlockSlideMap, source: PartitionFamily, target: PartitionFamily
) -> bool:
    """Whether ``m`` carries every atom of ``source`` exactly onto an atom of ``target``, bijectively."""
    perm = m.to_permutation() if isinstance(m, BlockSlideMap) else m
    common = perm.grid.lcm(source.natural_grid()).lcm(target.natural_grid())
    perm = perm.on(common)
    if source.n_atoms != target.n_atoms:
        return False
    src = source.labels_on(common)
    dst = target.labels_on(common)
    pairs = np.unique(np.stack([src, dst[perm.image]], axis=1), axis=0)
    if len(pairs) != source.n_atoms:
        return False
    return len(np.unique(pairs[:, 0])) == source.n_atoms and len(np.unique(pairs[:, 1])) == target.n_atoms


def slide_grid(d: int, maps: Iterable[BlockSlideMap]) -> GridSpec:
    grid = GridSpec.trivial(d)
    for m in maps:
        grid = grid.lcm(m.natural_grid())
    return grid
