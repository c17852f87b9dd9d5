"""Exact stage arithmetic and chain serialization."""

import math
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from core.params import (
    ParamSchedule,
    StageParams,
    build_schedule,
    check_return_identities,
    next_stage,
    seed_stage,
    validate_l_condition,
)
from errors import ParameterError


def desk_stage(p=3, q=5, k=1, l=6, d=2):
    return seed_stage(p, q, k, l, d=d, strict=False)


@st.composite
def legal_chains(draw):
    q = draw(st.integers(min_value=1, max_value=7))
    p = draw(st.integers(min_value=1, max_value=3 * q).filter(lambda v: math.gcd(v, q) == 1))
    k = draw(st.integers(min_value=1, max_value=3))
    l = draw(st.integers(min_value=1, max_value=8).filter(lambda v: (k * v) % 2 == 0))
    stage = seed_stage(p, q, k, l, strict=False)
    return stage, next_stage(stage, 1, 2, strict=False)


def test_recursion_matches_desk_example():
    stage = desk_stage()
    follower = next_stage(stage, 1, 2, strict=False)
    assert (follower.p, follower.q) == (91, 150)
    assert follower.alpha == Fraction(91, 150)
    assert stage.m == 3, "m = kl/2"
    assert stage.r == 4, "r = m p mod q = 9 mod 5"


def test_smallest_seed_keeps_unreduced_numerator():
    stage = seed_stage(1, 1, 1, 2)
    follower = next_stage(stage, 1, 2, strict=False)
    assert (follower.p, follower.q) == (3, 2)
    assert follower.alpha == Fraction(3, 2)


def test_return_identities_hold_on_desk_chain():
    stage = desk_stage()
    report = check_return_identities(stage, next_stage(stage, 1, 2, strict=False))
    assert report.passed
    assert report.lhs_m == Fraction(41, 50)
    assert report.lhs_m1 == Fraction(64, 150)


def test_corrupted_r_fails_with_residual():
    stage = desk_stage()
    report = check_return_identities(stage, next_stage(stage, 1, 2, strict=False), r_override=stage.r + 1)
    assert not report.passed
    assert report.residual_m != 0 and report.residual_m1 != 0


@given(legal_chains())
@settings(max_examples=60, deadline=None)
def test_identities_hold_for_random_chains(chain):
    stage, follower = chain
    assert follower.q == stage.k * stage.l * stage.q**2
    assert math.gcd(follower.p, follower.q) == 1
    assert check_return_identities(stage, follower).passed
    assert stage.delta * stage.n * stage.q == 1


def test_l_condition_examples():
    assert validate_l_condition(6, 2, 1, 1.0)
    assert not validate_l_condition(6, 2, 2, 1.0)
    assert validate_l_condition(100, 3, 2, 2.5)
    with pytest.raises(ParameterError):
        validate_l_condition(6, 2, 1, 0.5)


def test_epsilon_default_is_strictest_variant():
    stage = desk_stage()
    variants = stage.epsilon_variants
    assert stage.epsilon == min(variants.values()) == variants["higher"]
    assert stage.convergence_budget <= stage.epsilon


def test_strict_divisibility_is_enforced():
    with pytest.raises(ParameterError, match="divide"):
        seed_stage(3, 5, 1, 6, strict=True)
    stage = seed_stage(1, 2, 1, 4, strict=True)
    with pytest.raises(ParameterError):
        next_stage(stage, 1, 32, strict=True)
    assert next_stage(stage, 1, 128, strict=True).leven_holds


def test_odd_kl_and_common_factor_rejected():
    with pytest.raises(ParameterError, match="even"):
        StageParams(n=1, p=1, q=2, k=1, l=3)
    with pytest.raises(ParameterError, match="gcd"):
        StageParams(n=1, p=2, q=4, k=1, l=2)


def test_chain_json_keeps_exact_integers(tmp_path):
    schedule = build_schedule(1, 2, [(1, 4), (1, 32), (1, 2)], strict=False)
    path = tmp_path / "chain.json"
    schedule.write(path)
    restored = ParamSchedule.from_json(path.read_text(encoding="utf-8"))
    assert restored.stages == schedule.stages
    assert '"q": "16"' in path.read_text(encoding="utf-8"), "integers are stored as decimal strings"


def test_schedule_rejects_broken_chain():
    first = seed_stage(1, 2, 1, 4)
    stray = StageParams(n=2, p=1, q=3, k=1, l=2)
    with pytest.raises(ParameterError, match="successor"):
        ParamSchedule(stages=(first, stray))


def test_schedule_identity_reports_cover_every_stage():
    schedule = build_schedule(1, 2, [(1, 4), (2, 2)], strict=False)
    reports = schedule.identity_reports()
    assert len(reports) == 2 and all(r.passed for r in reports)
    assert list(schedule.frame()["q"]) == ["2", "16"]


def test_last_stage_identities_use_its_own_alpha_next():
    stage = seed_stage(1, 3, 2, 6)
    alone = check_return_identities(stage)
    for k, l in [(1, 2), (3, 18), (5, 4)]:
        assert check_return_identities(stage, next_stage(stage, k, l, strict=False)) == alone
    assert alone.passed and alone.lhs_m1 == Fraction(stage.m + 1) * stage.alpha_next % 1
    last = build_schedule(1, 3, [(2, 6)]).identity_reports()[-1]
    assert last == alone
