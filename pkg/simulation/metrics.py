"""
Speed of approximation and partition refinement for the stage processes.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import pandas as pd

import config
from analytic.good_domain import GoodDomain
from core.params import StageParams
from simulation.towers import CrossSection, PeriodicProcess

LOGGER = logging.getLogger(__name__)


def _num(value: Fraction) -> str:
    return str(value)


@dataclass(frozen=True)
class SpeedReport:
    """
    Finite-stage speed of a periodic process.

    ``weak_distance`` is the symmetric d(xi_n, T_n, sigma_n); ``one_sided`` the mass
    T_n moves out of the base, which is half of it.  Ratios are normalized by the
    height h (m_n or q_{n+1}).  The tail 40 d delta_{n+1} is quoted, not computed.
    """

    n: int
    kind: str
    height: int
    weak_distance: Fraction
    one_sided: Fraction
    discrepancies: dict[str, Fraction]
    one_sided_bound: Fraction
    symmetric_bound: Fraction
    tail_bound: Fraction
    ratio: float
    ratio_bound: float
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict[str, object]:
        return {
            "n": self.n,
            "kind": self.kind,
            "height": self.height,
            "weak_distance": _num(self.weak_distance),
            "one_sided": _num(self.one_sided),
            "discrepancies": {k: _num(v) for k, v in self.discrepancies.items()},
            "one_sided_bound": _num(self.one_sided_bound),
            "symmetric_bound": _num(self.symmetric_bound),
            "tail_bound": _num(self.tail_bound),
            "ratio": self.ratio,
            "ratio_bound": self.ratio_bound,
            "checks": dict(self.checks),
            "passed": self.passed,
        }


def speed_report(process: PeriodicProcess, exhaustive: bool = True) -> SpeedReport:
    """
    Tower pair: one-sided defect <= 3q/q', symmetric distance <= 6q/q' and
    h * defect <= 3/(2q) + 20d/((n+1) q^2).
    Cyclic tower: h * d <= 20d/(n+1).
    """
    stage = process.stage
    q, q_next, d, n = stage.q, stage.q_next, stage.d, stage.n
    discrepancies = process.top_discrepancies()
    distance = process.weak_distance() if exhaustive else sum(discrepancies.values(), start=Fraction(0))
    one_sided = distance / 2
    delta_next = Fraction(1, (n + 1) * q_next)
    checks = {"distance_is_sum_of_top_discrepancies": distance == sum(discrepancies.values())}

    if process.kind == "cyclic":
        height = q_next
        one_sided_bound = symmetric_bound = Fraction(0)
        ratio_bound = Fraction(20 * d, n + 1)
        checks["cyclic_tower_returns_exactly"] = distance == 0
    else:
        height = stage.m
        one_sided_bound = Fraction(3 * q, q_next)
        symmetric_bound = 2 * one_sided_bound
        ratio_bound = Fraction(3, 2 * q) + Fraction(20 * d, (n + 1) * q * q)
        checks["one_sided_defect_within_3q_over_q_next"] = one_sided <= one_sided_bound
        checks["symmetric_distance_within_6q_over_q_next"] = distance <= symmetric_bound
    ratio = one_sided * height
    checks["ratio_within_bound"] = ratio <= ratio_bound

    report = SpeedReport(
        n=n,
        kind=process.kind,
        height=height,
        weak_distance=distance,
        one_sided=one_sided,
        discrepancies=discrepancies,
        one_sided_bound=one_sided_bound,
        symmetric_bound=symmetric_bound,
        tail_bound=40 * d * delta_next,
        ratio=float(ratio),
        ratio_bound=float(ratio_bound),
        checks=checks,
    )
    LOGGER.info("Stage %d %s speed: d=%s ratio=%.3e (bound %.3e)", n, process.kind, distance, report.ratio, report.ratio_bound)
    return report


@dataclass(frozen=True)
class LevelCoverage:
    """One tower level measured against the good domain."""

    label: str
    level: int
    good_measure: Fraction
    contained: bool


def _cross_in_good_domain(cross: CrossSection, domain: GoodDomain) -> Fraction:
    total = Fraction(1)
    for axis, side in enumerate(cross.sides, start=1):
        total *= sum(
            (domain.axis_overlap(axis, (i + cross.delta) / side, (i + 1 - cross.delta) / side) for i in range(side)),
            start=Fraction(0),
        )
    return total


def good_domain_sweep(process: PeriodicProcess, domain: GoodDomain | None = None) -> list[LevelCoverage]:
    """
    Intersect every level (in conjugated coordinates) with the good domain of h_n^-1.

    A level is contained when each of its stripes lies in one inset block.
    """
    domain = GoodDomain.from_stage(process.stage) if domain is None else domain
    cross = process.cross_section
    cross_good = _cross_in_good_domain(cross, domain)
    cross_inside = cross_good == cross.measure
    sweep = []
    for tower in process.towers:
        for i, stripes in enumerate(tower.levels()):
            inside = sum((domain.axis_overlap(0, lo, hi) for lo, hi in stripes.x1_bounds()), start=Fraction(0))
            sweep.append(LevelCoverage(tower.label, i, inside * cross_good, cross_inside and inside == stripes.length))
    return sweep


def _within_drift(level: int, stage: StageParams) -> bool:
    # i * |alpha_{n+1} - alpha_n| < 1 / (2 q^2)
    return 2 * level * stage.q * stage.q < stage.q_next


@dataclass(frozen=True)
class CoverageReport:
    """
    ``level_mass`` counts the good measure in units of one level; ``contained_levels``
    counts levels lying wholly inside the good domain.
    """

    n: int
    kind: str
    contained_levels: int
    level_mass: Fraction
    level_bound: Fraction
    covered: Fraction
    coverage_target: Fraction
    substantial: dict[str, bool]

    @property
    def passed(self) -> bool:
        return (
            self.level_mass >= self.level_bound
            and self.covered >= self.coverage_target
            and all(self.substantial.values())
        )

    def to_dict(self) -> dict[str, object]:
        return {
            "n": self.n,
            "kind": self.kind,
            "contained_levels": self.contained_levels,
            "level_mass": _num(self.level_mass),
            "level_bound": _num(self.level_bound),
            "covered": _num(self.covered),
            "coverage_target": _num(self.coverage_target),
            "substantial": dict(self.substantial),
            "passed": self.passed,
        }


def partition_refinement_stats(
    process: PeriodicProcess,
    substantial_fraction: float | None = None,
    sweep: list[LevelCoverage] | None = None,
) -> CoverageReport:
    """
    Good measure of the levels that meet the drift rule (every cyclic level, tower-pair
    levels i with i / q_{n+1} < 1 / (2 q^2)).

    Targets: 2 (1 - 2 delta) m levels covering (1 - 1/q)(1 - 2 delta)^d for the tower
    pair, (1 - 2 delta) q_{n+1} levels covering (1 - 2 delta)^d for the cyclic tower.
    """
    stage = process.stage
    fraction = config.SUBSTANTIAL_FRACTION if substantial_fraction is None else substantial_fraction
    cyclic = process.kind == "cyclic"
    sweep = good_domain_sweep(process) if sweep is None else sweep
    kept = [row for row in sweep if cyclic or _within_drift(row.level, stage)]
    covered = sum((row.good_measure for row in kept), start=Fraction(0))
    contained = sum(1 for row in kept if row.contained)
    level_mass = covered / process.towers[0].base.measure

    keep = 1 - 2 * stage.delta
    if cyclic:
        level_bound = keep * stage.q_next
        target = keep**stage.d
    else:
        level_bound = 2 * keep * stage.m
        target = (1 - Fraction(1, stage.q)) * keep**stage.d
    cross = process.cross_section.measure
    substantial = {
        tower.label: tower.measure >= Fraction(fraction).limit_denominator(10**6) * cross
        for tower in process.towers
    }
    LOGGER.debug("Stage %d %s: %d of %d levels inside the good domain", stage.n, process.kind, contained, len(sweep))
    return CoverageReport(stage.n, process.kind, contained, level_mass, level_bound, covered, target, substantial)


@dataclass(frozen=True)
class ExceptionalSetReport:
    """E_n: the part of the torus outside the good domain, and the process mass it holds."""

    n: int
    kind: str
    measure: Fraction
    widths: tuple[Fraction, ...]
    process_mass: Fraction
    levels_meeting: int
    levels: int
    sampled_measure: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return abs(self.sampled_measure - float(self.measure)) <= self.tolerance

    def to_dict(self) -> dict[str, object]:
        return {
            "n": self.n,
            "kind": self.kind,
            "measure": _num(self.measure),
            "widths": [_num(w) for w in self.widths],
            "process_mass": _num(self.process_mass),
            "levels_meeting": self.levels_meeting,
            "levels": self.levels,
            "sampled_measure": self.sampled_measure,
            "tolerance": self.tolerance,
            "passed": self.passed,
        }


def exceptional_set_report(
    process: PeriodicProcess,
    samples: int = config.SAMPLES,
    seed: int = config.RANDOM_SEED,
    sweep: list[LevelCoverage] | None = None,
) -> ExceptionalSetReport:
    """
    ``widths`` are the diameters of the exceptional slabs across each axis; the sampled
    measure is checked against the exact one within four standard errors.
    """
    domain = GoodDomain.from_stage(process.stage)
    sweep = good_domain_sweep(process, domain) if sweep is None else sweep
    good = sum((row.good_measure for row in sweep), start=Fraction(0))
    exact = float(domain.exceptional_measure)
    sampled = 1.0 - domain.sampled_measure(samples, seed)
    tolerance = 4.0 * math.sqrt(exact * (1.0 - exact) / samples) + 1.0 / samples
    return ExceptionalSetReport(
        n=process.stage.n,
        kind=process.kind,
        measure=domain.exceptional_measure,
        widths=domain.exceptional_widths,
        process_mass=process.measure - good,
        levels_meeting=sum(1 for row in sweep if not row.contained),
        levels=len(sweep),
        sampled_measure=sampled,
        tolerance=tolerance,
    )


def speed_frame(reports: list[SpeedReport]) -> pd.DataFrame:
    return pd.DataFrame(
        [
            {
                "n": r.n,
                "kind": r.kind,
                "height": r.height,
                "weak_distance": float(r.weak_distance),
                "one_sided": float(r.one_sided),
                "ratio": r.ratio,
                "ratio_bound": r.ratio_bound,
                "passed": r.passed,
            }
            for r in reports
        ]
    )
