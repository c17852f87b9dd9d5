"""
The combinatorial conjugator on A-blocks.

The x_1 axis of the block grid has 2 l^d q^2 cells and the x_2 axis l cells.  An
x_1 cell index is a mixed-radix number with digits, most significant first,

    a in [0, q), b in [0, 2q), c in [0, l/(2q)), t_1..t_{d-2} in [0, l),
    e in [0, 2q), f in [0, l),

and j in [0, l) is the x_2 cell.  The map sends the block (a, b, c, t, e, f; j) to
(a', e, c, t, b, j; f) with a' = a + e r (e < q) or a + e (r + p) (e >= q), mod q.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np
import pandas as pd

from combinatorics.grid import CellPermutation, GridSpec
from core.params import StageParams, frac_mod1
from errors import ParameterError, require

LOGGER = logging.getLogger(__name__)


def _radices(l: int, q: int, d: int) -> tuple[int, ...]:
    return (q, 2 * q, l // (2 * q)) + (l,) * (d - 2) + (2 * q, l)


def _check_block_parameters(l: int, q: int, r: int, d: int) -> None:
    require(d >= 2, f"A-blocks need d >= 2, got d={d}")
    require(q >= 1 and l >= 1, f"l and q must be positive, got l={l}, q={q}")
    require(l % (2 * q) == 0, f"A-blocks need 2q | l, got l={l}, q={q}")
    require(0 <= r < q, f"r must lie in [0, q), got r={r}, q={q}")


def h_grid(l: int, q: int, d: int) -> GridSpec:
    return GridSpec.from_shape((2 * l**d * q * q, l) + (1,) * (d - 2))


@dataclass(frozen=True)
class ABlockIndex:
    a: int
    b: int
    c: int
    t: tuple[int, ...]
    e: int
    f: int
    j: int

    def digits(self) -> tuple[int, ...]:
        return (self.a, self.b, self.c, *self.t, self.e, self.f)

    def cell(self, l: int, q: int, d: int) -> int:
        radices = _radices(l, q, d)
        digits = self.digits()
        require(len(self.t) == d - 2, f"expected {d - 2} t-indices, got {len(self.t)}")
        require(all(0 <= x < n for x, n in zip(digits, radices)) and 0 <= self.j < l,
                f"block index {self} outside radices {radices}")
        i1 = int(np.ravel_multi_index(digits, radices))
        return i1 * l + self.j

    @classmethod
    def from_cell(cls, cell: int, l: int, q: int, d: int) -> "ABlockIndex":
        i1, j = divmod(int(cell), l)
        digits = [int(x) for x in np.unravel_index(i1, _radices(l, q, d))]
        return cls(digits[0], digits[1], digits[2], tuple(digits[3:-2]), digits[-2], digits[-1], j)

    def x1_interval(self, l: int, q: int, d: int) -> tuple[Fraction, Fraction]:
        i1 = self.cell(l, q, d) // l
        n1 = 2 * l**d * q * q
        return Fraction(i1, n1), Fraction(i1 + 1, n1)


def _image_arrays(l: int, p: int, q: int, r: int, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Image x_1 index and image x_2 index, shaped (n1, l) over (source x_1, source x_2)."""
    radices = _radices(l, q, d)
    n1 = int(np.prod(radices))
    digits = np.unravel_index(np.arange(n1, dtype=np.int64), radices)
    a, b, c, *t, e, f = digits
    shift = np.where(e < q, e * r, e * (r + p))
    a_new = (a + shift) % q
    j = np.arange(l, dtype=np.int64)
    image_digits = tuple(
        np.broadcast_to(x[:, None], (n1, l)) for x in (a_new, e, c, *t, b)
    ) + (np.broadcast_to(j[None, :], (n1, l)),)
    image_i1 = np.ravel_multi_index(image_digits, radices)
    image_x2 = np.broadcast_to(f[:, None], (n1, l))
    return image_i1, image_x2


def build_h_lpqr(l: int, p: int, q: int, r: int, d: int = 2) -> CellPermutation:
    """Exact permutation of the A-block grid."""
    _check_block_parameters(l, q, r, d)
    image_i1, image_x2 = _image_arrays(l, p, q, r, d)
    image = (image_i1 * l + image_x2).reshape(-1)
    LOGGER.debug("built A-block map l=%d p=%d q=%d r=%d d=%d on %d cells", l, p, q, r, d, image.size)
    return CellPermutation(h_grid(l, q, d), image, f"h[{l},{p},{q},{r}]")


def column_property_holds(l: int, p: int, q: int, r: int, d: int = 2) -> bool:
    """Whether the blocks with fixed (a, b, c, t, e, j) and f = 0..l-1 fill one full x_2 column."""
    _check_block_parameters(l, q, r, d)
    image_i1, image_x2 = _image_arrays(l, p, q, r, d)
    n1 = image_i1.shape[0]
    cols = image_i1.reshape(n1 // l, l, l)
    rows = image_x2.reshape(n1 // l, l, l)
    same_column = np.all(cols == cols[:, :1, :])
    full_height = np.all(np.sort(rows, axis=1) == np.arange(l)[None, :, None])
    return bool(same_column and full_height)


@dataclass(frozen=True)
class ConjugacyReport:
    """Block-by-block check that the rotations by m*alpha' and (m+1)*alpha' - 1/q' advance e by one."""

    n: int
    r_used: int
    checked: int
    failures: int
    boundary_checked: int
    boundary_holds: int
    shift_low: Fraction
    shift_high: Fraction
    failing_blocks: tuple[ABlockIndex, ...] = field(default=())

    @property
    def passed(self) -> bool:
        return self.checked > 0 and self.failures == 0

    def to_dict(self) -> dict[str, object]:
        payload = asdict(self)
        payload["shift_low"] = str(self.shift_low)
        payload["shift_high"] = str(self.shift_high)
        payload["failing_blocks"] = [asdict(b) for b in self.failing_blocks]
        payload["passed"] = self.passed
        return payload


def verify_conjugacy_identity(stage: StageParams, r_override: int | None = None) -> ConjugacyReport:
    """
    Check phi^beta(h(A_{..e..})) = h(A_{..e+1..}) on every block.

    beta = m alpha' for 0 <= e < q-1 and beta = (m+1) alpha' - 1/q' for q <= e < 2q-1.
    The transition e = q-1 is reported separately and never counted as a failure.
    """
    l, p, q, d = stage.l, stage.p, stage.q, stage.d
    r = stage.r if r_override is None else r_override % q
    if not stage.h_admissible:
        raise ParameterError(f"stage {stage.n}: A-blocks need 2q | l, got l={l}, q={q}")
    image_i1, image_x2 = _image_arrays(l, p, q, r, d)
    n1 = image_i1.shape[0]
    alpha_next = stage.alpha_next
    shift_low = frac_mod1(stage.m * alpha_next)
    shift_high = frac_mod1((stage.m + 1) * alpha_next - Fraction(1, stage.q_next))
    steps_low, steps_high = shift_low * n1, shift_high * n1
    require(steps_low.denominator == 1 and steps_high.denominator == 1,
            f"return rotations {shift_low}, {shift_high} do not act on the block grid")

    # e is the second least significant digit of the x_1 index, with unit l.
    e = (np.arange(n1) // l) % (2 * q)
    checked = failures = boundary_checked = boundary_holds = 0
    failing: list[ABlockIndex] = []
    for low, high, steps, boundary in (
        (0, q - 1, int(steps_low), False),
        (q, 2 * q - 1, int(steps_high), False),
        (q - 1, q, int(steps_low), True),
    ):
        sources = np.nonzero((e >= low) & (e < high))[0]
        if sources.size == 0:
            continue
        targets = sources + l
        ok = (
            (image_i1[targets] == (image_i1[sources] + steps) % n1)
            & (image_x2[targets] == image_x2[sources])
        )
        if boundary:
            boundary_checked += ok.size
            boundary_holds += int(ok.sum())
            continue
        checked += ok.size
        failures += int(ok.size - ok.sum())
        for i1, jx in zip(*np.nonzero(~ok)):
            if len(failing) >= 10:
                break
            failing.append(ABlockIndex.from_cell(int(sources[i1]) * l + int(jx), l, q, d))
    report = ConjugacyReport(
        n=stage.n,
        r_used=r,
        checked=checked,
        failures=failures,
        boundary_checked=boundary_checked,
        boundary_holds=boundary_holds,
        shift_low=shift_low,
        shift_high=shift_high,
        failing_blocks=tuple(failing),
    )
    LOGGER.info(
        "stage %d block identity: %d checked, %d failures, %d/%d boundary blocks agree",
        stage.n, checked, failures, boundary_holds, boundary_checked,
    )
    return report


def h_pattern_frame(l: int, p: int, q: int, r: int) -> pd.DataFrame:
    """Planar block layout: source and image rectangles with their digits."""
    _check_block_parameters(l, q, r, 2)
    image_i1, image_x2 = _image_arrays(l, p, q, r, 2)
    n1 = image_i1.shape[0]
    a, b, c, e, f = np.unravel_index(np.arange(n1), _radices(l, q, 2))
    i1 = np.repeat(np.arange(n1), l)
    jx = np.tile(np.arange(l), n1)
    return pd.DataFrame(
        {
            "a": np.repeat(a, l),
            "b": np.repeat(b, l),
            "c": np.repeat(c, l),
            "e": np.repeat(e, l),
            "f": np.repeat(f, l),
            "j": jx,
            "x1_cell": i1,
            "x2_cell": jx,
            "image_x1_cell": image_i1.reshape(-1),
            "image_x2_cell": image_x2.reshape(-1),
            "n1": n1,
            "n2": l,
        }
    )
