"""The A-block conjugator and its return identities."""

from fractions import Fraction

import pytest

from combinatorics.blockslide import commutes_with_phi
from combinatorics.hmap import (
    ABlockIndex,
    build_h_lpqr,
    column_property_holds,
    h_pattern_frame,
    verify_conjugacy_identity,
)
from core.params import StageParams
from errors import ParameterError


def block_stage(p=1, q=3, k=1, l=6, d=2):
    return StageParams(n=1, p=p, q=q, k=k, l=l, d=d)


def test_worked_block_image():
    block = ABlockIndex(a=0, b=0, c=0, t=(), e=1, f=2, j=3)
    assert block.x1_interval(6, 3, 2) == (Fraction(8, 648), Fraction(9, 648))
    h = build_h_lpqr(6, 1, 3, 1, d=2)
    lo = h.grid.cell_box(int(h.image[block.cell(6, 3, 2)])).lo
    assert lo == (Fraction(255, 648), Fraction(1, 3))


def test_e_zero_keeps_sector():
    h = build_h_lpqr(6, 1, 3, 2, d=2)
    image = ABlockIndex.from_cell(int(h.image[ABlockIndex(0, 4, 0, (), 0, 5, 1).cell(6, 3, 2)]), 6, 3, 2)
    assert image.a == 0
    assert (image.b, image.e, image.f, image.j) == (0, 4, 1, 5)


@pytest.mark.parametrize("d", [2, 3])
@pytest.mark.parametrize("r", [0, 1, 2])
def test_block_map_commutes_with_sector_rotation(d, r):
    h = build_h_lpqr(6, 1, 3, r, d=d)
    assert commutes_with_phi(h, 3)
    assert column_property_holds(6, 1, 3, r, d=d)


@pytest.mark.parametrize("d", [2, 3])
def test_conjugacy_identity_on_every_block(d):
    for k in (1, 2):
        report = verify_conjugacy_identity(block_stage(k=k, d=d))
        assert report.passed, f"failures: {report.failing_blocks}"
        assert report.boundary_checked > 0


def test_corrupted_r_breaks_identity():
    stage = block_stage(k=2)
    report = verify_conjugacy_identity(stage, r_override=stage.r + 1)
    assert not report.passed
    assert report.failures > 0


def test_requires_even_multiple_of_q():
    with pytest.raises(ParameterError, match="2q"):
        build_h_lpqr(6, 3, 5, 4)
    with pytest.raises(ParameterError):
        verify_conjugacy_identity(StageParams(n=1, p=3, q=5, k=1, l=6))


def test_pattern_frame_is_a_relabelling():
    frame = h_pattern_frame(6, 1, 3, 0)
    assert len(frame) == 648 * 6
    pairs = set(zip(frame["image_x1_cell"], frame["image_x2_cell"]))
    assert len(pairs) == len(frame), "every block has a distinct image"
