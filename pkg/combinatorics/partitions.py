"""
Partition families of the torus and the action of rotations on them.

Every family lives on a natural grid; atoms are single cells (T, G, G_j, S) or
unions of k cells (R).  Cells are labelled with their atom index, and all set
questions (refinement, images under maps) are answered on label arrays.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import pandas as pd

from combinatorics.grid import Box, CellPermutation, GridSpec
from errors import IncompatibleGridError, ParameterError, require

LOGGER = logging.getLogger(__name__)

KINDS = ("T", "G", "Gj", "R", "S")


@dataclass(frozen=True)
class Atom:
    index: int
    boxes: tuple[Box, ...]

    @property
    def measure(self) -> Fraction:
        return sum((b.volume for b in self.boxes), Fraction(0))


@dataclass(frozen=True)
class PartitionFamily:
    """One of T_q, G_{l,q}, G_{j,l,q}, R_{a,k,q}, S_{kq,l} on the d-torus."""

    kind: str
    d: int
    q: int
    l: int = 1
    k: int = 1
    j: int = 0
    a: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        require(self.kind in KINDS, f"unknown partition kind {self.kind!r}")
        require(self.d >= 1, f"dimension must be >= 1, got {self.d}")
        require(self.q >= 1 and self.l >= 1 and self.k >= 1,
                f"partition parameters must be positive, got q={self.q}, l={self.l}, k={self.k}")
        if self.kind == "Gj":
            require(1 <= self.j <= self.d, f"G_j needs 1 <= j <= d, got j={self.j}, d={self.d}")
        if self.kind == "R":
            require(len(self.a) == self.k,
                    f"R needs an a-function with k={self.k} values, got {len(self.a)}")

    @classmethod
    def T(cls, q: int, d: int = 2) -> "PartitionFamily":
        return cls("T", d, q)

    @classmethod
    def G(cls, l: int, q: int, d: int = 2) -> "PartitionFamily":
        return cls("G", d, q, l=l)

    @classmethod
    def Gj(cls, j: int, l: int, q: int, d: int = 2) -> "PartitionFamily":
        return cls("Gj", d, q, l=l, j=j)

    @classmethod
    def R(cls, k: int, q: int, d: int = 2, a: Sequence[int] | None = None) -> "PartitionFamily":
        if a is not None and len(a) == 0:
            raise ParameterError("R needs a non-empty a-function")
        values = tuple(int(v) for v in a) if a is not None else (0,) * k
        return cls("R", d, q, k=k, a=values)

    @classmethod
    def S(cls, k: int, q: int, l: int, d: int = 2) -> "PartitionFamily":
        return cls("S", d, q, l=l, k=k)

    @property
    def name(self) -> str:
        if self.kind == "T":
            return f"T_{self.q}"
        if self.kind == "G":
            return f"G_{{{self.l},{self.q}}}"
        if self.kind == "Gj":
            return f"G_{{{self.j},{self.l},{self.q}}}"
        if self.kind == "R":
            return f"R_{{a,{self.k},{self.q}}}"
        return f"S_{{{self.k * self.q},{self.l}}}"

    def natural_grid(self) -> GridSpec:
        d, q, l = self.d, self.q, self.l
        if self.kind == "T":
            shape = (q,) + (1,) * (d - 1)
        elif self.kind == "G":
            shape = (l * q,) + (l,) * (d - 1)
        elif self.kind == "Gj":
            shape = (l ** (d + 1 - self.j) * q,) + (l,) * (self.j - 1) + (1,) * (d - self.j)
        elif self.kind == "R":
            shape = (self.k * q,) + (1,) * (d - 1)
        else:
            shape = (self.k * q,) + ((l,) + (1,) * (d - 2) if d >= 2 else ())
        return GridSpec.from_shape(shape)

    @property
    def n_atoms(self) -> int:
        return self.q if self.kind == "R" else self.natural_grid().n_cells

    def cell_labels(self) -> np.ndarray:
        """Atom index of every natural-grid cell."""
        grid = self.natural_grid()
        cells = np.arange(grid.n_cells, dtype=np.int64)
        if self.kind != "R":
            return cells
        offsets = np.asarray(self.a, dtype=np.int64)
        return (cells // self.k - offsets[cells % self.k]) % self.q

    def labels_on(self, grid: GridSpec) -> np.ndarray:
        natural = self.natural_grid()
        if not grid.refines(natural):
            raise IncompatibleGridError(f"grid {grid.shape} does not refine {self.name} grid {natural.shape}")
        factors = [a // b for a, b in zip(grid.shape, natural.shape)]
        fine = grid.unravel_all()
        coarse = np.ravel_multi_index(tuple(x // f for x, f in zip(fine, factors)), natural.shape)
        return self.cell_labels()[coarse]


def atoms(family: PartitionFamily) -> list[Atom]:
    """Complete atom list; R atoms keep their k boxes separate."""
    grid = family.natural_grid()
    labels = family.cell_labels()
    boxes: list[list[Box]] = [[] for _ in range(family.n_atoms)]
    for cell, label in enumerate(labels):
        boxes[int(label)].append(grid.cell_box(cell))
    return [Atom(index, tuple(b)) for index, b in enumerate(boxes)]


def _induced_map(src: np.ndarray, dst: np.ndarray, n_src: int) -> np.ndarray | None:
    """Atom map src-label -> dst-label if every source atom lands in one target atom."""
    pairs = np.unique(np.stack([src, dst], axis=1), axis=0)
    if len(pairs) != len(np.unique(pairs[:, 0])):
        return None
    mapping = np.full(n_src, -1, dtype=np.int64)
    mapping[pairs[:, 0]] = pairs[:, 1]
    return mapping


def phi_action(family: PartitionFamily, alpha: Fraction) -> np.ndarray:
    """Atom permutation induced by the x_1 rotation by ``alpha``; entry i is the image of atom i."""
    grid = family.natural_grid()
    rotation = CellPermutation.rotation(grid, Fraction(alpha))
    labels = family.cell_labels()
    mapping = _induced_map(labels, labels[rotation.image], family.n_atoms)
    if mapping is None or len(np.unique(mapping)) != family.n_atoms:
        raise IncompatibleGridError(f"rotation by {alpha} does not permute the atoms of {family.name}")
    return mapping


def locate(point: Sequence[Fraction], family: PartitionFamily) -> int:
    """Atom containing ``point`` (half-open convention)."""
    grid = family.natural_grid()
    return int(family.cell_labels()[grid.cell_of(point)])


def refines(fine: PartitionFamily, coarse: PartitionFamily) -> bool:
    """Whether every atom of ``fine`` lies inside one atom of ``coarse``."""
    common = fine.natural_grid().lcm(coarse.natural_grid())
    return _induced_map(fine.labels_on(common), coarse.labels_on(common), fine.n_atoms) is not None


def same_partition(first: PartitionFamily, second: PartitionFamily) -> bool:
    return refines(first, second) and refines(second, first)


def atoms_frame(family: PartitionFamily) -> pd.DataFrame:
    """One row per box with exact fraction strings."""
    rows = []
    for atom in atoms(family):
        for part, box in enumerate(atom.boxes):
            rows.append({"family": family.name, "atom": atom.index, "part": part, **box.as_row()})
    return pd.DataFrame(rows)
