"""
Koopman operators of finite stage maps.

A stage map permutes N equal cells, so U f = f o T is the coordinate permutation
(U f)[c] = f[image[c]] and is exactly unitary on L^2 of the uniform measure.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
import pandas as pd

from errors import ParameterError, require

LOGGER = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PermutationSystem:
    """Measure-preserving map on N equal cells, given by the image of every cell."""

    image: np.ndarray
    label: str = "T"

    def __post_init__(self) -> None:
        image = np.asarray(self.image, dtype=np.int64)
        n = image.size
        if image.ndim != 1 or not np.array_equal(np.sort(image), np.arange(n)):
            raise ParameterError(f"{self.label}: image is not a permutation of {n} cells")
        object.__setattr__(self, "image", image)

    @classmethod
    def from_rotation(cls, alpha: Fraction, n_cells: int, label: str = "") -> "PermutationSystem":
        """x -> x + alpha on the circle cut into ``n_cells`` arcs."""
        steps = Fraction(alpha) * n_cells
        require(steps.denominator == 1, f"rotation by {alpha} does not permute {n_cells} arcs")
        shift = int(steps) % n_cells
        return cls((np.arange(n_cells, dtype=np.int64) + shift) % n_cells, label or f"rot({alpha})")

    @classmethod
    def from_stage_map(cls, stage_map) -> "PermutationSystem":
        require(stage_map.permutation is not None, f"stage {stage_map.n} has no exact map")
        return cls(stage_map.permutation.image, f"T_{stage_map.n}")

    @property
    def n_cells(self) -> int:
        return int(self.image.size)

    def power(self, k: int) -> np.ndarray:
        """Image array of T^k; negative k gives powers of the inverse."""
        base = self.image
        if k < 0:
            base = np.empty_like(self.image)
            base[self.image] = np.arange(self.n_cells)
            k = -k
        result = np.arange(self.n_cells, dtype=np.int64)
        while k:
            if k & 1:
                result = base[result]
            base = base[base]
            k >>= 1
        return result


@dataclass(frozen=True, eq=False)
class Observable:
    values: np.ndarray
    label: str = "f"

    @classmethod
    def indicator(cls, mask: np.ndarray, label: str = "1_A") -> "Observable":
        return cls(np.asarray(mask, dtype=float), label)

    @property
    def mean(self) -> complex | float:
        return self.values.mean()

    def centered(self) -> "Observable":
        return Observable(self.values - self.values.mean(), f"{self.label}-mean")

    def inner(self, other: "Observable") -> complex | float:
        return np.vdot(other.values, self.values) / self.values.size


def koopman_apply(system: PermutationSystem, f: Observable, power: int = 1) -> Observable:
    require(f.values.size == system.n_cells, f"observable has {f.values.size} cells, system {system.n_cells}")
    return Observable(f.values[system.power(power)], f"U^{power} {f.label}")


@dataclass(frozen=True)
class KoopmanCorrelations:
    """c_k = <U^k f, f> for k = 0..K."""

    label: str
    values: np.ndarray
    mean: complex | float

    @property
    def lags(self) -> np.ndarray:
        return np.arange(self.values.size)

    @property
    def max_lag(self) -> int:
        return int(self.values.size) - 1

    def frame(self) -> pd.DataFrame:
        return pd.DataFrame({"lag": self.lags, "real": self.values.real, "imag": np.imag(self.values)})


def correlations(system: PermutationSystem, f: Observable, max_lag: int) -> KoopmanCorrelations:
    require(max_lag >= 0, f"max_lag must be >= 0, got {max_lag}")
    require(f.values.size == system.n_cells, f"observable has {f.values.size} cells, system {system.n_cells}")
    values = np.empty(max_lag + 1, dtype=complex)
    moved = f.values
    for k in range(max_lag + 1):
        values[k] = np.vdot(f.values, moved) / f.values.size
        moved = moved[system.image]
    if np.all(np.isreal(f.values)):
        values = values.real.astype(complex)
    return KoopmanCorrelations(f.label, values, f.mean)


def stage_rotation(process) -> PermutationSystem:
    """R_{alpha_{n+1}} on the q_{n+1} arcs that carry the tower observables."""
    stage = process.stage
    return PermutationSystem.from_rotation(stage.alpha_next, stage.q_next, f"R_{stage.n}")


def tower_observables(process, levels: Sequence[int] | None = None) -> list[Observable]:
    """
    Mean-zero indicators of merged levels (eta atoms) along x_1 in conjugated
    coordinates.

    All stripes share the offset delta', so after removing it every stripe is a run
    of arcs of width 1/q_{n+1}.  The cross-section only rescales correlations and is
    dropped.
    """
    n_arcs = process.stage.q_next
    first = process.towers[0].base.stripes
    unit = first.denominator // n_arcs
    offset = first.starts[0] % unit
    eta, xi = process.eta, process.xi
    levels = range(len(eta)) if levels is None else levels
    observables = []
    for i in levels:
        require(0 <= i < len(eta), f"merged level {i} outside 0..{len(eta) - 1}")
        mask = np.zeros(n_arcs, dtype=bool)
        for atom in eta[i]:
            t, level = xi[atom]
            stripes = process.towers[t].level(level)
            for start in stripes.starts:
                arc = (start - offset) // unit
                mask[np.arange(arc, arc + stripes.width // unit) % n_arcs] = True
        observables.append(Observable.indicator(mask, f"eta_{i}").centered())
    LOGGER.debug("Built %d tower observables on %d arcs", len(observables), n_arcs)
    return observables


def random_observables(n_cells: int, count: int, seed: int) -> list[Observable]:
    rng = np.random.default_rng(seed)
    return [Observable(rng.standard_normal(n_cells), f"random_{k}").centered() for k in range(count)]
