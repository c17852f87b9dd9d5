"""Heat-kernel mollification of step functions."""

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from analytic.mollifier import MollifiedStep, mollify_step
from combinatorics.step_functions import StepFunction
from errors import MollificationError, ParameterError


def two_level():
    return StepFunction((Fraction(0), Fraction(1, 2)), (Fraction(0), Fraction(1, 2)))


def dense_grid(n=10_000):
    return (np.arange(n) + 0.5) / n


def max_error_outside(mollified, step, x):
    good = ~mollified.near_jump(x)
    return float(np.abs(mollified(x) - step.evaluate_array(x))[good].max())


def test_constant_step_is_reproduced():
    mollified = mollify_step(StepFunction.constant(Fraction(1, 2)), None, 1e-3, 0.1)
    x = dense_grid(100)
    assert np.array_equal(mollified(x), np.full(100, 0.5))
    assert mollified.bad_measure() == 0.0


def test_two_level_step_is_close_outside_jumps():
    step = two_level()
    mollified = mollify_step(step, None, 1e-3, 0.1)
    x = dense_grid()
    assert max_error_outside(mollified, step, x) < 1e-3
    assert mollified.bad_measure() == pytest.approx(0.1)
    assert mollified.near_jump(x).mean() == pytest.approx(0.1, abs=1e-3)


def test_periodic_step_keeps_its_period():
    step = StepFunction.from_cells([0, Fraction(1, 3)] * 3, 6)
    mollified = mollify_step(step, None, 1e-2, 0.1)
    assert mollified.n == 3
    rng = np.random.default_rng(7)
    x = rng.random(1000)
    assert np.abs(mollified(x + 1 / 3) - mollified(x)).max() < 1e-12


def test_complex_evaluation_is_periodic_on_the_strip():
    step = StepFunction.from_cells([0, Fraction(1, 3)] * 3, 6)
    mollified = MollifiedStep(step, 3, sigma=0.25)
    rng = np.random.default_rng(11)
    z = rng.random(100) + 1j * rng.uniform(-0.5, 0.5, 100)
    shifted = mollified(z + 1 / 3)
    assert np.all(np.isfinite(shifted))
    assert np.abs(shifted - mollified(z)).max() < 1e-10


def test_derivative_matches_central_differences():
    mollified = MollifiedStep(two_level(), 1, sigma=0.05)
    x = np.linspace(0.0, 1.0, 201)
    h = 1e-6
    numeric = (mollified(x + h) - mollified(x - h)) / (2 * h)
    analytic = mollified.derivative(x)
    assert np.abs(analytic - numeric).max() <= 1e-6 * np.abs(analytic).max()


def test_unreachable_closeness_reports_achievable_pair():
    with pytest.raises(MollificationError) as info:
        mollify_step(two_level(), None, 1e-12, 1e-9)
    assert info.value.achievable_eps >= 1e-12
    assert info.value.achievable_delta == 1e-9


def test_period_must_divide_step_period():
    with pytest.raises(ParameterError, match="periodic"):
        mollify_step(two_level(), 2, 1e-2, 0.1)
    with pytest.raises(ParameterError):
        mollify_step(two_level(), None, 0.0, 0.1)


@settings(max_examples=20, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=4), min_size=8, max_size=8))
def test_random_steps_are_close_outside_jumps(levels):
    step = StepFunction.from_cells([Fraction(v, 8) for v in levels], 8)
    mollified = mollify_step(step, None, 1e-2, 0.1)
    x = dense_grid()
    assert max_error_outside(mollified, step, x) < 1e-2
    assert mollified.near_jump(x).mean() <= 0.1 + 2e-3
