"""
Towers of the periodic processes approximating T_n.

Towers are built in conjugated coordinates, where T_n acts as the rotation by
alpha_{n+1} along x_1.  Every level is an x_1 stripe set times one fixed
cross-section in x_2..x_d, so level geometry is integer interval arithmetic over a
common denominator.  Bases are pulled back under H_n^-1 only when actual-coordinate
boxes are wanted.
"""

from __future__ import annotations

import itertools
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np
import pandas as pd

import config
from combinatorics.grid import Box, CellPermutation, GridSpec
from core.params import StageParams
from errors import LevelCollisionError, ParameterError, require

LOGGER = logging.getLogger(__name__)

LABELS = ("hTower", "hPlusOneTower", "cyclic")
PLACEMENTS = ("aligned", "literal")


@dataclass(frozen=True)
class CrossSection:
    """Union of the delta-insets of the 2l x l x ... x l blocks of x_2..x_d."""

    l: int
    delta: Fraction
    d: int

    @classmethod
    def from_stage(cls, stage: StageParams) -> "CrossSection":
        return cls(stage.l, stage.delta, stage.d)

    @property
    def sides(self) -> tuple[int, ...]:
        if self.d < 2:
            return ()
        return (2 * self.l,) + (self.l,) * (self.d - 2)

    @property
    def measure(self) -> Fraction:
        return (1 - 2 * self.delta) ** (self.d - 1)

    def boxes(self) -> Iterator[tuple[tuple[Fraction, ...], tuple[Fraction, ...]]]:
        for index in itertools.product(*(range(s) for s in self.sides)):
            lo = tuple((i + self.delta) / s for i, s in zip(index, self.sides))
            hi = tuple((i + 1 - self.delta) / s for i, s in zip(index, self.sides))
            yield lo, hi

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership of an (n, d - 1) array of x_2..x_d coordinates."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if not self.sides:
            return np.ones(len(points), dtype=bool)
        offset = np.mod(points * np.array(self.sides, dtype=float), 1.0)
        delta = float(self.delta)
        return np.all((offset >= delta) & (offset < 1.0 - delta), axis=1)


def _intersection_length(first: list[tuple[int, int]], second: list[tuple[int, int]]) -> int:
    i = j = total = 0
    while i < len(first) and j < len(second):
        lo = max(first[i][0], second[j][0])
        hi = min(first[i][1], second[j][1])
        if hi > lo:
            total += hi - lo
        if first[i][1] < second[j][1]:
            i += 1
        else:
            j += 1
    return total


@dataclass(frozen=True)
class StripeSet:
    """x_1 intervals [s / D, (s + width) / D) mod 1, all of one width."""

    denominator: int
    width: int
    starts: tuple[int, ...]

    def __post_init__(self) -> None:
        require(
            0 < self.width <= self.denominator,
            f"stripe width {self.width}/{self.denominator} must lie in (0, 1]",
        )
        object.__setattr__(self, "starts", tuple(sorted(int(s) % self.denominator for s in self.starts)))

    def __len__(self) -> int:
        return len(self.starts)

    @property
    def length(self) -> Fraction:
        return Fraction(len(self.starts) * self.width, self.denominator)

    def shift(self, numerator: int) -> "StripeSet":
        return StripeSet(self.denominator, self.width, tuple(s + numerator for s in self.starts))

    def intervals(self) -> list[tuple[int, int]]:
        """Sorted integer intervals with the wrap at 1 split off."""
        pieces = []
        for start in self.starts:
            end = start + self.width
            if end > self.denominator:
                pieces.append((start, self.denominator))
                pieces.append((0, end - self.denominator))
            else:
                pieces.append((start, end))
        return sorted(pieces)

    def overlap(self, other: "StripeSet") -> Fraction:
        require(self.denominator == other.denominator, "stripe sets use different denominators")
        return Fraction(_intersection_length(self.intervals(), other.intervals()), self.denominator)

    def symmetric_difference(self, other: "StripeSet") -> Fraction:
        return self.length + other.length - 2 * self.overlap(other)

    def contains(self, x: np.ndarray) -> np.ndarray:
        starts = np.array(self.starts, dtype=float)
        y = np.mod(np.asarray(x, dtype=float), 1.0) * self.denominator
        index = np.searchsorted(starts, y, side="right") - 1
        start = np.where(index >= 0, starts[index], starts[-1] - self.denominator)
        return (y - start) < self.width

    def x1_bounds(self) -> list[tuple[Fraction, Fraction]]:
        return [(Fraction(a, self.denominator), Fraction(b, self.denominator)) for a, b in self.intervals()]


def _level_boxes(stripes: StripeSet, cross: CrossSection) -> list[Box]:
    return [
        Box((a, *lo), (b, *hi))
        for a, b in stripes.x1_bounds()
        for lo, hi in cross.boxes()
    ]


@dataclass(frozen=True)
class TowerBase:
    label: str
    stage: StageParams
    stripes: StripeSet
    cross_section: CrossSection

    def __post_init__(self) -> None:
        require(self.label in LABELS, f"tower label must be one of {LABELS}, got {self.label!r}")

    @property
    def measure(self) -> Fraction:
        return self.stripes.length * self.cross_section.measure

    def boxes(self) -> list[Box]:
        return _level_boxes(self.stripes, self.cross_section)

    def frame(self) -> pd.DataFrame:
        rows = [
            {"label": self.label, "x1_lo": str(lo), "x1_hi": str(hi)}
            for lo, hi in self.stripes.x1_bounds()
        ]
        return pd.DataFrame(rows, columns=["label", "x1_lo", "x1_hi"])


@dataclass(frozen=True)
class Tower:
    """Levels R^i(base), 0 <= i < height, for the rotation R by ``step / D``."""

    base: TowerBase
    height: int
    step: int

    @property
    def label(self) -> str:
        return self.base.label

    @property
    def measure(self) -> Fraction:
        return self.height * self.base.measure

    def level(self, i: int) -> StripeSet:
        require(0 <= i < self.height, f"{self.label} has levels 0..{self.height - 1}, got {i}")
        return self.base.stripes.shift(i * self.step)

    def levels(self) -> Iterator[StripeSet]:
        for i in range(self.height):
            yield self.level(i)

    def level_boxes(self, i: int) -> list[Box]:
        return _level_boxes(self.level(i), self.base.cross_section)

    def top_discrepancy(self) -> Fraction:
        """mu(T(top) symmetric-difference base), the only non-zero term of the weak distance."""
        returned = self.base.stripes.shift(self.height * self.step)
        return returned.symmetric_difference(self.base.stripes) * self.base.cross_section.measure


def _check_disjoint(towers: Sequence[Tower]) -> None:
    pieces = []
    for t, tower in enumerate(towers):
        for i, stripes in enumerate(tower.levels()):
            pieces.extend((a, b, t, i) for a, b in stripes.intervals())
    pieces.sort()
    reach, owner = -1, None
    for a, b, t, i in pieces:
        if a < reach:
            first = f"{towers[owner[0]].label}[{owner[1]}]"
            at = Fraction(a, towers[t].base.stripes.denominator)
            raise LevelCollisionError(f"tower levels {first} and {towers[t].label}[{i}] overlap at x_1 = {at}")
        if b > reach:
            reach, owner = b, (t, i)


@dataclass(frozen=True)
class PeriodicProcess:
    """
    Disjoint towers with their cyclic level permutation sigma.

    ``xi`` lists every level as (tower, level); ``eta`` merges the i-th levels of all
    towers, so every eta atom is a union of xi atoms.
    """

    stage: StageParams
    kind: str
    towers: tuple[Tower, ...]

    @property
    def cross_section(self) -> CrossSection:
        return self.towers[0].base.cross_section

    @property
    def measure(self) -> Fraction:
        return sum((tower.measure for tower in self.towers), start=Fraction(0))

    @property
    def xi(self) -> list[tuple[int, int]]:
        return [(t, i) for t, tower in enumerate(self.towers) for i in range(tower.height)]

    def sigma(self) -> np.ndarray:
        """Atom index of sigma(c) for every atom c of ``xi``."""
        image, offset = [], 0
        for tower in self.towers:
            image.extend(offset + (i + 1) % tower.height for i in range(tower.height))
            offset += tower.height
        return np.array(image, dtype=np.int64)

    @property
    def eta(self) -> list[tuple[int, ...]]:
        index = {atom: k for k, atom in enumerate(self.xi)}
        tallest = max(tower.height for tower in self.towers)
        return [
            tuple(index[(t, i)] for t, tower in enumerate(self.towers) if i < tower.height)
            for i in range(tallest)
        ]

    def eta_coarser_than_xi(self) -> bool:
        members = sorted(k for atom in self.eta for k in atom)
        return members == list(range(len(self.xi)))

    def check_disjoint(self) -> None:
        _check_disjoint(self.towers)

    def top_discrepancies(self) -> dict[str, Fraction]:
        return {tower.label: tower.top_discrepancy() for tower in self.towers}

    def weak_distance(self, exhaustive: bool = True) -> Fraction:
        """
        d(xi, T_n, sigma) in conjugated coordinates.

        ``exhaustive`` sums mu(R(c) symmetric-difference sigma(c)) over every level;
        otherwise only the top levels are evaluated.
        """
        if not exhaustive:
            return sum(self.top_discrepancies().values(), start=Fraction(0))
        total = Fraction(0)
        for tower in self.towers:
            cross = tower.base.cross_section.measure
            for i in range(tower.height):
                moved = tower.level(i).shift(tower.step)
                target = tower.level((i + 1) % tower.height)
                total += moved.symmetric_difference(target) * cross
        return total

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Index into ``xi`` of the level holding each conjugated point, -1 outside."""
        points = np.mod(np.atleast_2d(np.asarray(points, dtype=float)), 1.0)
        inside = self.cross_section.contains(points[:, 1:])
        atoms = np.full(len(points), -1, dtype=np.int64)
        for k, (t, i) in enumerate(self.xi):
            atoms[inside & self.towers[t].level(i).contains(points[:, 0])] = k
        return atoms

    def frame(self) -> pd.DataFrame:
        return pd.concat([tower.base.frame() for tower in self.towers], ignore_index=True)


def _stripe_denominator(stage: StageParams) -> int:
    return math.lcm(2 * stage.n * stage.l**stage.d * stage.q**3, stage.q_next)


def _scaled(value: Fraction, denominator: int) -> int:
    scaled = value * denominator
    require(scaled.denominator == 1, f"{value} is not a multiple of 1/{denominator}")
    return scaled.numerator


def _finish(stage: StageParams, kind: str, towers: tuple[Tower, ...], check_disjoint: bool) -> PeriodicProcess:
    process = PeriodicProcess(stage, kind, towers)
    if check_disjoint:
        process.check_disjoint()
    else:
        LOGGER.debug("Stage %d %s towers built without the disjointness sweep", stage.n, kind)
    LOGGER.info(
        "Stage %d %s process: heights %s, measure %.6f",
        stage.n,
        kind,
        [tower.height for tower in towers],
        float(process.measure),
    )
    return process


def build_hh1_towers(
    stage: StageParams,
    placement: str = "aligned",
    check_disjoint: bool = True,
) -> PeriodicProcess:
    """
    Tower pair of heights m_n and m_n + 1 over the stripe bases c~_{0,1}, c~_{0,2}.

    ``placement="literal"`` puts stripe i_1 of the second base at
    i_1 (r + p) / q + 1 / (2q) + i_1 / (2q^2) + delta'; ``"aligned"`` adds i_1 / q_{n+1}
    so that R^{m+1} carries stripe i_1 exactly onto stripe i_1 + 1.
    Raises ``LevelCollisionError`` when two levels overlap.
    """
    require(placement in PLACEMENTS, f"placement must be one of {PLACEMENTS}, got {placement!r}")
    require(stage.q >= 2, f"the tower pair needs q >= 2 for a non-empty base, got q={stage.q}")
    D = _stripe_denominator(stage)
    q, q_next = stage.q, stage.q_next
    offset = D // (2 * stage.n * stage.l**stage.d * q**3)
    width = q * D // q_next
    slot = D // (2 * q * q)
    step = _scaled(stage.alpha_next - math.floor(stage.alpha_next), D)
    cross = CrossSection.from_stage(stage)

    first = [i * (stage.r * D // q) + i * slot + offset for i in range(q - 1)]
    second = [
        i * ((stage.r + stage.p) * D // q) + D // (2 * q) + i * slot + offset for i in range(q - 1)
    ]
    if placement == "aligned":
        second = [s + i * (D // q_next) for i, s in enumerate(second)]
    towers = (
        Tower(TowerBase("hTower", stage, StripeSet(D, width, tuple(first)), cross), stage.m, step),
        Tower(TowerBase("hPlusOneTower", stage, StripeSet(D, width, tuple(second)), cross), stage.m + 1, step),
    )
    return _finish(stage, "hh1", towers, check_disjoint)


def build_cyclic_tower(stage: StageParams, check_disjoint: bool = True) -> PeriodicProcess:
    """Single tower of height q_{n+1} over d~_0 = [delta', delta' + 1/q_{n+1}] x cross-section."""
    require(
        math.gcd(stage.p_next, stage.q_next) == 1,
        f"p_next={stage.p_next} and q_next={stage.q_next} must be coprime",
    )
    D = _stripe_denominator(stage)
    offset = D // (2 * stage.n * stage.l**stage.d * stage.q**3)
    step = _scaled(stage.alpha_next - math.floor(stage.alpha_next), D)
    base = TowerBase("cyclic", stage, StripeSet(D, D // stage.q_next, (offset,)), CrossSection.from_stage(stage))
    return _finish(stage, "cyclic", (Tower(base, stage.q_next, step),), check_disjoint)


def _split_on_grid(boxes: Sequence[Box], grid: GridSpec) -> dict[int, list[Box]]:
    cells: dict[int, list[Box]] = defaultdict(list)
    for box in boxes:
        for index in grid.cells_in_box(box):
            cell = int(np.ravel_multi_index(index, grid.shape))
            piece = box.intersection(grid.cell_box(cell))
            if piece is not None:
                cells[cell].append(piece)
    return cells


def boxes_measure(boxes: Sequence[Box]) -> Fraction:
    return sum((box.volume for box in boxes), start=Fraction(0))


def symmetric_difference(first: Sequence[Box], second: Sequence[Box], grid: GridSpec) -> Fraction:
    """mu(A symmetric-difference B) for two unions of pairwise disjoint boxes."""
    left, right = _split_on_grid(first, grid), _split_on_grid(second, grid)
    shared = Fraction(0)
    for cell, pieces in left.items():
        for a in pieces:
            for b in right.get(cell, ()):
                overlap = a.intersection(b)
                if overlap is not None:
                    shared += overlap.volume
    return boxes_measure(first) + boxes_measure(second) - 2 * shared


def _image(boxes: Sequence[Box], permutation: CellPermutation) -> list[Box]:
    return [piece for box in boxes for piece in permutation.apply_box(box)]


def pull_back(boxes: Sequence[Box], stage_map) -> list[Box]:
    """H_n^-1 of a union of conjugated-coordinate boxes."""
    H = stage_map.conjugator
    require(H is not None, f"stage {stage_map.n} has no exact conjugator")
    return _image(boxes, H.inverse())


def pull_back_base(base: TowerBase, stage_map) -> list[Box]:
    require(
        base.stage == stage_map.params,
        f"base belongs to stage {base.stage.n}, the map to stage {stage_map.n}",
    )
    return pull_back(base.boxes(), stage_map)


def pulled_back_towers_agree(process: PeriodicProcess, stage_map) -> bool:
    """
    T_n carries H_n^-1(level 0) onto H_n^-1(level 1) for every tower, and pull-back
    keeps the base measure.
    """
    T = stage_map.permutation
    require(T is not None, f"stage {stage_map.n} has no exact map")
    for tower in process.towers:
        if tower.height < 2:
            continue
        base = pull_back_base(tower.base, stage_map)
        if boxes_measure(base) != tower.base.measure:
            return False
        level = pull_back(tower.level_boxes(1), stage_map)
        if symmetric_difference(_image(base, T), level, T.grid) != 0:
            LOGGER.warning("Stage %d: pulled-back %s is not a T_n tower", stage_map.n, tower.label)
            return False
    return True


def weak_distance(xi: Sequence[Sequence[Box]], T: CellPermutation, sigma: Sequence[int]) -> Fraction:
    """d(xi, T, sigma) = sum over atoms c of mu(T(c) symmetric-difference sigma(c)), exactly."""
    sigma = [int(s) for s in sigma]
    if sorted(sigma) != list(range(len(xi))):
        raise ParameterError(f"sigma {sigma} does not permute the {len(xi)} atoms of xi")
    return sum(
        (symmetric_difference(_image(atom, T), xi[sigma[k]], T.grid) for k, atom in enumerate(xi)),
        start=Fraction(0),
    )


@dataclass(frozen=True)
class SampledDistance:
    value: float
    stderr: float
    samples: int

    def to_dict(self) -> dict[str, float]:
        return {"value": self.value, "stderr": self.stderr, "samples": self.samples}


def weak_distance_sampled(
    locate: Callable[[np.ndarray], np.ndarray],
    T: Callable[[np.ndarray], np.ndarray],
    sigma: Sequence[int],
    d: int,
    samples: int = config.SAMPLES,
    seed: int = config.RANDOM_SEED,
) -> SampledDistance:
    """
    Monte-Carlo d(xi, T, sigma) for a measure-preserving T.

    With atoms located by ``locate`` (-1 off xi) the distance equals
    2 mu{x in xi : T(x) not in sigma(atom of x)}.
    """
    require(samples > 0, f"samples must be positive, got {samples}")
    sigma = np.asarray(sigma, dtype=np.int64)
    x = np.random.default_rng(seed).random((samples, d))
    atom = locate(x)
    inside = atom >= 0
    target = np.where(inside, sigma[np.maximum(atom, 0)], -1)
    moved = inside & (locate(T(x)) != target)
    p = float(moved.mean())
    return SampledDistance(2.0 * p, 2.0 * math.sqrt(p * (1.0 - p) / samples), samples)
