"""Stage assembly, k_n search and orbit evaluation."""

import math
from fractions import Fraction

import numpy as np
import pytest

from analytic.torus_maps import torus_gap
from combinatorics.grid import CellPermutation
from core.params import StageParams, next_stage, seed_stage
from errors import BudgetError, ParameterError
from simulation.abc_model import build_chain, build_stage, choose_kn, evaluate


def first_stage(**overrides):
    values = dict(n=1, p=1, q=2, k=1, l=4)
    values.update(overrides)
    return StageParams(**values)


def coarse_chain():
    stage = seed_stage(1, 1, 1, 2)
    return [stage, next_stage(stage, 1, 4, strict=False)]


def test_first_stage_grid_and_checks():
    stage = build_stage(first_stage())
    assert stage.grid.shape == (128, 4)
    assert stage.passed, stage.checks
    assert set(stage.checks) == {
        "h_commutes_with_rotation",
        "T_power_is_identity",
        "T_permutes_pulled_back_stripes",
    }


def test_cycle_lengths_divide_next_denominator():
    stage = build_stage(first_stage())
    q_next = stage.params.q_next
    assert q_next == 16
    assert np.all(q_next % stage.permutation.cycle_lengths() == 0)


def test_slide_model_and_higher_dimension():
    assert build_stage(first_stage(), planar="g").passed
    stage = build_stage(first_stage(d=3))
    assert stage.passed, stage.checks
    assert stage.grid.shape == (512, 4, 4)


def test_degenerate_l_gives_rotation():
    stage = build_stage(StageParams(n=1, p=1, q=1, k=2, l=1))
    assert stage.params.alpha_next == Fraction(3, 2)
    rotation = CellPermutation.rotation(stage.grid, stage.params.alpha_next)
    assert stage.permutation.equals(rotation)
    orbit = evaluate(stage, (0, 0), 3)
    assert [point[0] for point in orbit] == [0, Fraction(1, 2), 0, Fraction(1, 2)]


def test_orbit_returns_after_cycle_length():
    stage = build_stage(first_stage())
    period = int(stage.permutation.cycle_lengths()[0])
    start = (Fraction(1, 512), Fraction(1, 16))
    orbit = evaluate(stage, start, period)
    assert orbit[-1] == orbit[0]
    assert start not in orbit[1:-1]
    assert evaluate(stage, orbit[-2], -1)[-1] == orbit[-3]


def test_budget_error_raised_before_allocation():
    with pytest.raises(BudgetError) as info:
        build_stage(first_stage(), cell_budget=100)
    assert info.value.cells == 512
    assert info.value.shape == (128, 4)


def test_orbit_bound():
    stage = build_stage(first_stage())
    with pytest.raises(ParameterError, match="bound"):
        evaluate(stage, (0, 0), 10**9)


def test_two_stage_exact_chain():
    maps = build_chain(coarse_chain())
    assert [m.n for m in maps] == [1, 2]
    assert all(m.passed for m in maps)
    assert maps[1].stack.depth == 2
    assert maps[1].grid.refines(maps[0].grid)


def test_exact_stage_limit():
    assert len(build_chain(coarse_chain(), exact_stages=1)) == 1
    maps = build_chain(coarse_chain(), mode="both", planar="g", exact_stages=1, samples=500)
    assert maps[1].permutation is None
    assert maps[1].analytic is not None
    assert maps[1].checks["analytic_h_commutes_with_rotation"]


def test_analytic_mode_requires_slide_model():
    with pytest.raises(ParameterError, match="planar"):
        build_stage(first_stage(), mode="analytic", planar="h")


def test_analytic_and_exact_orbits_agree_outside_bad_set():
    stage = build_stage(StageParams(n=1, p=1, q=1, k=1, l=2), mode="both", planar="g", delta=0.2)
    assert stage.passed, stage.checks
    eps = float(stage.params.epsilon)
    x = np.random.default_rng(17).random((100, 2))
    good = ~stage.bad_mask(x)
    assert good.mean() > 0.5
    gap = torus_gap(stage.analytic(x[good]), stage.permutation.apply_array(x[good]))
    assert gap.max() < eps


def test_choose_kn_halves_rotation_gap():
    draft = StageParams(n=1, p=1, q=2, k=2, l=1)
    choice = choose_kn(draft)
    assert choice.passed
    assert choice.k == 64, "needs k > 12 d n q"
    gaps = [gap for _, gap in choice.certificates]
    assert [k for k, _ in choice.certificates] == [2, 4, 8, 16, 32, 64]
    for wide, narrow in zip(gaps, gaps[1:]):
        assert narrow == pytest.approx(wide / 2)
    assert choose_kn(draft, epsilon_budget=math.inf).k == 2


def test_choose_kn_flags_sharp_mollifiers():
    choice = choose_kn(StageParams(n=1, p=1, q=1, k=1, l=2), rho=0.5, k_ceiling=2, samples=50)
    assert not choice.passed
    assert choice.k == 2
    assert all(math.isinf(gap) for _, gap in choice.certificates)
