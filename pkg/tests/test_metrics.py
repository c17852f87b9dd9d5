"""Speed-of-approximation and coverage reports."""

from fractions import Fraction

import pytest

from analytic.good_domain import GoodDomain
from core.params import StageParams, next_stage, seed_stage
from simulation.metrics import (
    exceptional_set_report,
    good_domain_sweep,
    partition_refinement_stats,
    speed_frame,
    speed_report,
)
from simulation.towers import build_cyclic_tower, build_hh1_towers


def coverage_stage():
    return StageParams(n=1, p=3, q=5, k=2, l=10)


def thin_stage():
    # stripe width 1/(k l q) = 3/5832 fits the inset of a 9/5832 block
    return StageParams(n=1, p=1, q=3, k=108, l=6)


def three_stage_chain():
    first = seed_stage(1, 3, 1, 6, strict=False)
    second = next_stage(first, 2, 2 * first.q_next, strict=False)
    third = next_stage(second, 1, 2 * second.q_next, strict=False)
    return [first, second, third]


def test_ratio_bound_closed_forms():
    report = speed_report(build_hh1_towers(coverage_stage()))
    assert report.ratio_bound == pytest.approx(1.1)
    cyclic = speed_report(build_cyclic_tower(coverage_stage()))
    assert cyclic.ratio_bound == pytest.approx(20.0)
    assert cyclic.weak_distance == 0 and cyclic.passed


def test_tower_pair_speed_within_bounds():
    """One-sided defect against 3q/q_{n+1}; the symmetric distance is checked against 6q/q_{n+1}."""
    stage = coverage_stage()
    report = speed_report(build_hh1_towers(stage))
    assert report.passed, report.checks
    assert report.one_sided <= Fraction(3 * stage.q, stage.q_next)
    assert report.symmetric_bound == Fraction(6 * stage.q, stage.q_next)
    assert report.weak_distance == sum(report.discrepancies.values())
    assert report.height == stage.m
    assert report.tail_bound == Fraction(80, 2 * stage.q_next)


def test_ratios_decrease_along_a_chain():
    reports = [
        speed_report(build_hh1_towers(stage, check_disjoint=False), exhaustive=False)
        for stage in three_stage_chain()
    ]
    ratios = [r.ratio for r in reports]
    assert ratios == sorted(ratios, reverse=True)
    assert len(set(ratios)) == 3
    assert all(r.passed for r in reports)
    frame = speed_frame(reports)
    assert list(frame["n"]) == [1, 2, 3]


def test_tower_pair_coverage():
    """Stage p/q = 3/5 with k = 2, l = 10: m = 10 >= 2q - 2 keeps the pair disjoint (k = 1 collides)."""
    report = partition_refinement_stats(build_hh1_towers(coverage_stage()))
    assert report.coverage_target == Fraction(288, 1000)
    assert report.covered == report.coverage_target
    assert report.level_mass == report.level_bound == 2 * Fraction(3, 5) * 10
    # stripes of width 1/100 span fifty good-domain blocks
    assert report.contained_levels == 0
    assert report.passed, report.to_dict()


def test_cyclic_coverage():
    report = partition_refinement_stats(build_cyclic_tower(coverage_stage()))
    assert report.coverage_target == Fraction(36, 100)
    assert report.covered == report.coverage_target
    assert report.passed, report.to_dict()


def test_coverage_target_approaches_one_minus_one_over_q():
    stage = StageParams(n=40, p=3, q=5, k=2, l=10)
    report = partition_refinement_stats(build_hh1_towers(stage))
    assert float(report.coverage_target) == pytest.approx(0.8, abs=0.02)


def test_substantiality_threshold():
    """SUBSTANTIAL_FRACTION = 0.25 passes; 0.45 exceeds the tower-pair measures."""
    process = build_hh1_towers(coverage_stage())
    assert all(partition_refinement_stats(process).substantial.values())
    strict = partition_refinement_stats(process, substantial_fraction=0.45)
    assert not all(strict.substantial.values())


def test_levels_outside_the_good_domain_are_excluded():
    stage = thin_stage()
    process = build_hh1_towers(stage)
    domain = GoodDomain.from_stage(stage)
    sweep = good_domain_sweep(process, domain)
    first = [row for row in sweep if row.label == "hTower"]
    base = process.towers[0].base.measure

    assert first[0].contained and first[0].good_measure == base
    # one step drifts the stripes by 1/q_{n+1}, a third of the inset
    assert not first[1].contained
    assert first[1].good_measure == Fraction(2, 3) * base
    assert [row.level for row in first if row.contained] == list(range(0, stage.m, 9))

    report = partition_refinement_stats(process, sweep=sweep)
    assert report.contained_levels == 36
    assert report.level_mass == report.level_bound == 216
    assert report.covered == report.coverage_target == Fraction(2, 27)


def test_top_level_of_second_tower_breaks_the_drift_rule():
    stage = thin_stage()
    process = build_hh1_towers(stage)
    sweep = good_domain_sweep(process)
    report = partition_refinement_stats(process, sweep=sweep)
    everything = sum((row.good_measure for row in sweep), start=Fraction(0))
    top = next(row for row in sweep if row.label == "hPlusOneTower" and row.level == stage.m)
    assert report.covered == everything - top.good_measure


def test_exceptional_set_report():
    stage = coverage_stage()
    process = build_hh1_towers(stage)
    report = exceptional_set_report(process, samples=4000, seed=11)
    assert report.measure == 1 - Fraction(3, 5) ** 2
    assert report.widths == (Fraction(2, 5 * 5000), Fraction(2, 5 * 20))
    assert report.levels == 2 * stage.m + 1 == report.levels_meeting
    assert report.process_mass > 0
    assert report.process_mass + partition_refinement_stats(process).covered <= process.measure
    assert report.passed, report.to_dict()


def test_exceptional_report_counts_levels_meeting_the_slabs():
    process = build_hh1_towers(thin_stage())
    report = exceptional_set_report(process, samples=500, seed=3)
    assert report.levels_meeting == report.levels - 36
    assert 0 < report.process_mass < process.measure
