"""Koopman correlations, weak-limit fits, kappa statistics and Fejer densities."""

import logging
from fractions import Fraction

import numpy as np
import pytest

from core.params import StageParams
from errors import ParameterError
from simulation.abc_model import build_stage
from simulation.towers import build_hh1_towers
from spectral.density import spectral_measure_estimate
from spectral.koopman import (
    Observable,
    PermutationSystem,
    correlations,
    koopman_apply,
    random_observables,
    stage_rotation,
    tower_observables,
)
from spectral.weak_limit import fit_weak_limit, kappa_statistic


def linked_process():
    # q = 9 keeps the stripe leaving each tower small; m = 18 >= 2q - 2
    return build_hh1_towers(StageParams(n=1, p=1, q=9, k=1, l=36))


def transposition():
    image = np.arange(8)
    image[[1, 4]] = [4, 1]
    return PermutationSystem(image)


def test_rotation_system_and_powers():
    system = PermutationSystem.from_rotation(Fraction(1, 3), 6)
    assert system.image.tolist() == [2, 3, 4, 5, 0, 1]
    assert np.array_equal(system.power(3), np.arange(6))
    assert np.array_equal(system.image[system.power(-1)], np.arange(6))
    with pytest.raises(ParameterError):
        PermutationSystem.from_rotation(Fraction(1, 4), 6)
    with pytest.raises(ParameterError):
        PermutationSystem(np.array([0, 0, 1]))


def test_koopman_operator_is_unitary():
    system = PermutationSystem(np.random.default_rng(1).permutation(500))
    f, g = random_observables(500, 2, seed=4)
    Uf, Ug = koopman_apply(system, f), koopman_apply(system, g)
    assert Uf.inner(Ug) == pytest.approx(f.inner(g), abs=1e-12)
    assert Uf.inner(Uf) == pytest.approx(f.inner(f), abs=1e-12)


def test_stage_map_system_has_period_q_next():
    stage = StageParams(n=1, p=1, q=3, k=2, l=6)
    system = PermutationSystem.from_stage_map(build_stage(stage))
    assert np.array_equal(system.power(stage.q_next), np.arange(system.n_cells))


def test_tower_observables_are_mean_zero_indicators():
    process = linked_process()
    observables = tower_observables(process)
    assert len(observables) == process.stage.m + 1
    for f in observables:
        assert abs(f.mean) < 1e-12
    arcs = np.count_nonzero(observables[0].values > 0)
    assert arcs == 2 * (process.stage.q - 1) * process.stage.q


def test_weak_limit_fit_on_linked_towers():
    process = linked_process()
    system = stage_rotation(process)
    observables = tower_observables(process)
    even = fit_weak_limit(system, observables[0::2], process.stage.m)
    odd = fit_weak_limit(system, observables[1::2], process.stage.m)
    for fit in (even, odd):
        assert 0.05 < fit.r < 0.95, fit.to_dict()
        assert fit.residual < 0.5
        assert fit.consistent
    assert abs(even.r - odd.r) < 0.1


def test_weak_limit_needs_moving_observables():
    system = PermutationSystem(np.arange(10))
    with pytest.raises(ParameterError):
        fit_weak_limit(system, random_observables(10, 2, seed=0), 3)


def test_kappa_statistic_extremes():
    A = np.arange(8) < 4
    B = np.arange(8) < 2
    assert kappa_statistic(transposition(), [(A, B)], 1).kappa == pytest.approx(1.0)
    assert kappa_statistic(PermutationSystem(np.arange(8)), [(A, B)], 1).kappa == pytest.approx(0.0)


def test_kappa_excludes_independent_pairs(caplog):
    A = np.arange(8) < 4
    independent = np.arange(8) % 2 == 0
    with caplog.at_level(logging.WARNING):
        estimate = kappa_statistic(transposition(), [(A, np.arange(8) < 2), (A, independent)], 1)
    assert estimate.used == 1 and estimate.excluded == 1
    assert "Excluded" in caplog.text
    with pytest.raises(ParameterError):
        kappa_statistic(transposition(), [(A, independent)], 1)


def test_fejer_density_mass_and_sign():
    process = linked_process()
    f = tower_observables(process)[3]
    corr = correlations(stage_rotation(process), f, 40)
    density = spectral_measure_estimate(corr)
    assert density.theta.size == 81
    assert density.mass == pytest.approx(corr.values[0].real, abs=1e-8)
    assert corr.values[0].real == pytest.approx(f.inner(f).real)
    assert density.density.min() > -1e-9


def test_fejer_density_rejects_non_centered_observables():
    system = PermutationSystem.from_rotation(Fraction(1, 5), 10)
    raw = Observable.indicator(np.arange(10) < 3)
    with pytest.raises(ParameterError, match="mean"):
        spectral_measure_estimate(correlations(system, raw, 5))
    with pytest.raises(ParameterError):
        spectral_measure_estimate(correlations(system, raw.centered(), 5), n_points=4)


def test_short_fejer_window_warns(caplog):
    system = PermutationSystem.from_rotation(Fraction(1, 5), 10)
    f = Observable.indicator(np.arange(10) < 3).centered()
    with caplog.at_level(logging.WARNING):
        spectral_measure_estimate(correlations(system, f, 2))
    assert "short" in caplog.text
