"""Analytic slides, closeness to block-slide models, strip norms and the good domain."""

from fractions import Fraction

import numpy as np
import pytest

from analytic.good_domain import GoodDomain
from analytic.mollifier import MollifiedStep
from analytic.norms import d_rho, derivative_norm, strip_norm
from analytic.torus_maps import AnalyticSlide, AnalyticTorusMap, build_h_analytic, closeness_report
from combinatorics.blockslide import BlockSlideMap, ElementarySlide, compose_g
from combinatorics.grid import Box
from combinatorics.step_functions import StepFunction
from core.params import StageParams
from errors import MollificationError, ParameterError


def two_level():
    return StepFunction((Fraction(0), Fraction(1, 2)), (Fraction(0), Fraction(1, 2)))


def single_slide():
    return BlockSlideMap(2, (ElementarySlide(1, 0, two_level()),), "s")


def smooth_slide(sigma=0.05):
    return AnalyticTorusMap(2, (AnalyticSlide(1, 0, MollifiedStep(two_level(), 1, sigma=sigma)),), "smooth")


def sample_points(n=1000, d=2, seed=5):
    return np.random.default_rng(seed).random((n, d))


def test_trivial_block_slide_gives_identity():
    h = build_h_analytic(compose_g(1, 3, 2), 3, 1e-3, 0.1)
    assert h.steps == ()
    x = sample_points()
    assert np.array_equal(h(x), x)
    assert not h.bad_mask(x).any()


def test_single_slide_is_close_outside_jump_stripes():
    m = single_slide()
    h = build_h_analytic(m, 1, 1e-3, 0.1)
    report = closeness_report(h, m, 1e-3, 0.1, samples=20_000)
    assert report.passed, report.to_dict()
    assert report.max_error_outside < 1e-3
    assert report.bad_fraction < 0.1


def test_g_composition_realization():
    m = compose_g(2, 3, 2)
    h = build_h_analytic(m, 3, 1e-2, 0.1)
    report = closeness_report(h, m, 1e-2, 0.1, q=3, samples=5_000)
    assert report.passed, report.to_dict()
    assert report.commutation_residual < 1e-10


def test_closeness_verdict_is_reproducible_across_seeds():
    m = compose_g(2, 1, 2)
    h = build_h_analytic(m, 1, 1e-2, 0.1)
    verdicts = {closeness_report(h, m, 1e-2, 0.1, samples=2_000, seed=seed).passed for seed in (1, 2, 3)}
    assert verdicts == {True}


def test_realization_preserves_volume_and_inverts():
    h = build_h_analytic(compose_g(2, 1, 2), 1, 1e-2, 0.5)
    x = sample_points()
    det = np.linalg.det(h.jacobian(x))
    assert np.abs(det - 1.0).max() < 1e-8
    assert np.abs(h.inverse()(h(x)) - x).max() < 1e-8


def test_non_commuting_model_rejected():
    with pytest.raises(ParameterError, match="commute"):
        build_h_analytic(single_slide(), 4, 1e-3, 0.1)


def test_unreachable_closeness_propagates():
    with pytest.raises(MollificationError):
        build_h_analytic(single_slide(), 1, 1e-12, 1e-9)


def test_strip_norm_of_sine_matches_cosh():
    value = strip_norm(lambda z: np.sin(2 * np.pi * z), 0.1)
    assert value == pytest.approx(np.cosh(2 * np.pi * 0.1), rel=1e-2)


def test_strip_norm_of_constant():
    assert strip_norm(lambda z: np.full(z.shape, -0.75), 0.3) == 0.75


def test_strip_norm_grows_with_width_and_samples():
    step = MollifiedStep(two_level(), 1, sigma=0.0076)
    narrow = strip_norm(step, 0.05, samples=200)
    assert np.isfinite(narrow)
    assert strip_norm(step, 0.1, samples=200) > narrow
    assert strip_norm(step, 0.05, samples=400) >= narrow


def test_strip_norm_reports_overflow_as_infinite():
    assert strip_norm(lambda z: np.exp(np.exp(50 * z.imag)), 1.0, samples=10) == float("inf")


def test_d_rho_basics():
    f = smooth_slide()
    assert d_rho(f, f, 0.05) == 0.0
    near = AnalyticTorusMap.rotation(2, 0.3)
    far = AnalyticTorusMap.rotation(2, 0.9)
    assert d_rho(near, far, 0.05) == pytest.approx(0.4)
    for g in (near, far, smooth_slide(0.1)):
        assert d_rho(f, g, 0.05, samples=100) == d_rho(g, f, 0.05, samples=100)


def test_derivative_norm_of_rigid_maps():
    for h in (AnalyticTorusMap.identity(2), AnalyticTorusMap.rotation(2, Fraction(1, 3))):
        report = derivative_norm(h, samples=100)
        assert report.sup == 1.0
        assert report.agrees


def test_derivative_norm_of_smooth_slide():
    h = smooth_slide()
    report = derivative_norm(h, samples=500)
    assert report.agrees, report.to_dict()
    assert 3.5 < report.sup < 0.5 / (0.05 * np.sqrt(2 * np.pi)) + 1e-9
    assert derivative_norm(h, samples=500, rho=0.05).sup > report.sup


def test_good_domain_geometry():
    stage = StageParams(n=2, p=1, q=2, k=1, l=4)
    good = GoodDomain.from_stage(stage)
    assert good.block_grid.shape == (2 * 16 * 4, 8)
    assert good.measure == (1 - 2 * stage.delta) ** 2
    inset = good.inset(0)
    assert inset.volume == good.measure * good.block_grid.cell_volume
    corner = np.array([[float(v) for v in inset.lo]]) + 1e-12
    assert good.contains(corner).all()
    assert not good.contains(np.zeros((1, 2))).any()
    assert good.sampled_measure(20_000, 3) == pytest.approx(float(good.measure), abs=0.02)


def test_good_domain_overlaps_are_exact():
    stage = StageParams(n=2, p=1, q=2, k=1, l=4)
    good = GoodDomain.from_stage(stage)
    block = Fraction(1, 128)
    assert good.axis_overlap(0, Fraction(0), block) == block / 2
    assert good.axis_overlap(0, Fraction(0), block / 4) == 0
    assert good.axis_overlap(0, block / 4, 3 * block / 4) == block / 2
    assert good.axis_overlap(0, 3 * block / 8, 5 * block / 4) == 3 * block / 8
    whole = Box((Fraction(0), Fraction(0)), (Fraction(1), Fraction(1)))
    assert good.box_overlap(whole) == good.measure
    assert good.box_overlap(good.inset(5)) == good.inset(5).volume
    assert good.exceptional_measure == 1 - good.measure
    assert good.exceptional_widths == (Fraction(1, 256), Fraction(1, 16))
