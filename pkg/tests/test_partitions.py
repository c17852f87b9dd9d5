"""Partition families, rotations acting on atoms, and exact grids."""

from fractions import Fraction

import numpy as np
import pytest

from combinatorics.grid import Box, CellPermutation, GridSpec
from combinatorics.partitions import (
    PartitionFamily,
    atoms,
    atoms_frame,
    locate,
    phi_action,
    refines,
    same_partition,
)
from errors import IncompatibleGridError, ParameterError


def total_measure(family):
    return sum(atom.measure for atom in atoms(family))


def test_thirds_on_planar_torus():
    family = PartitionFamily.T(3, d=2)
    found = atoms(family)
    assert len(found) == 3
    assert found[1].boxes[0] == Box((Fraction(1, 3), 0), (Fraction(2, 3), 1))
    assert total_measure(family) == 1


def test_g_family_counts_and_trivial_family():
    assert len(atoms(PartitionFamily.G(2, 1, d=2))) == 4
    only = atoms(PartitionFamily.T(1, d=3))
    assert len(only) == 1 and only[0].measure == 1


def test_r_family_atoms_are_unions_of_k_boxes():
    family = PartitionFamily.R(3, 4, d=2, a=(0, 1, 2))
    found = atoms(family)
    assert len(found) == 4
    assert all(len(atom.boxes) == 3 for atom in found)
    assert all(atom.measure == Fraction(1, 4) for atom in found)
    with pytest.raises(ParameterError):
        PartitionFamily.R(3, 4, a=())


def test_invalid_j_rejected():
    with pytest.raises(ParameterError):
        PartitionFamily.Gj(0, 2, 1, d=2)
    with pytest.raises(ParameterError):
        PartitionFamily.Gj(3, 2, 1, d=2)


def test_rotation_acts_as_cycle():
    family = PartitionFamily.T(3)
    assert list(phi_action(family, Fraction(1, 3))) == [1, 2, 0]
    assert list(phi_action(family, Fraction(2, 3))) == [2, 0, 1]
    with pytest.raises(IncompatibleGridError):
        phi_action(family, Fraction(1, 2))


def test_rotation_actions_compose():
    family = PartitionFamily.S(2, 3, 2)
    one = phi_action(family, Fraction(1, 6))
    two = phi_action(family, Fraction(1, 3))
    assert np.array_equal(one[one], two)


def test_locate_uses_half_open_convention():
    assert locate((Fraction(0), Fraction(0)), PartitionFamily.T(3)) == 0
    assert locate((Fraction(1, 3), Fraction(1, 2)), PartitionFamily.T(3)) == 1
    assert locate((Fraction(5, 6), Fraction(0)), PartitionFamily.G(2, 1)) == 2


def test_partition_identities():
    for d in (2, 3):
        assert same_partition(PartitionFamily.Gj(d, 2, 3, d=d), PartitionFamily.G(2, 3, d=d))
        assert same_partition(PartitionFamily.Gj(1, 2, 3, d=d), PartitionFamily.T(2**d * 3, d=d))
    assert refines(PartitionFamily.G(2, 3), PartitionFamily.T(3))
    assert not refines(PartitionFamily.T(3), PartitionFamily.G(2, 3))


def test_atoms_frame_has_fraction_strings():
    frame = atoms_frame(PartitionFamily.T(2))
    assert list(frame["hi_1"]) == ["1/2", "1"]


def test_cell_permutation_lifts_and_inverts():
    grid = GridSpec.from_shape((4, 2))
    rotation = CellPermutation.rotation(grid, Fraction(1, 4))
    fine = rotation.on(GridSpec.from_shape((8, 6)))
    assert fine.equals(rotation)
    assert rotation.power(4).is_identity()
    assert rotation.compose(rotation.inverse()).is_identity()
    assert set(rotation.cycle_lengths()) == {4}
    assert rotation.apply_point((Fraction(7, 8), Fraction(1, 3))) == (Fraction(1, 8), Fraction(1, 3))


def test_rotation_needs_whole_cells():
    with pytest.raises(IncompatibleGridError):
        CellPermutation.rotation(GridSpec.from_shape((3, 1)), Fraction(1, 2))


def test_non_bijection_rejected():
    with pytest.raises(ParameterError, match="bijection"):
        CellPermutation(GridSpec.from_shape((2, 1)), np.array([0, 0]))


def test_box_image_is_cut_at_cells():
    grid = GridSpec.from_shape((2, 1))
    swap = CellPermutation(grid, np.array([1, 0]))
    pieces = swap.apply_box(Box((Fraction(1, 4), 0), (Fraction(3, 4), 1)))
    assert sum(p.volume for p in pieces) == Fraction(1, 2)
    assert {p.lo[0] for p in pieces} == {Fraction(3, 4), Fraction(0)}
