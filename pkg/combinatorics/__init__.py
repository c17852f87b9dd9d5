"""
Exact combinatorics: grids, partitions, step functions and block-slide maps.
"""

from .blockslide import (
    BlockSlideMap,
    ElementarySlide,
    build_g,
    build_psi,
    commutes_with_phi,
    compose_g,
    maps_partition,
)
from .grid import Box, CellPermutation, GridSpec
from .hmap import ABlockIndex, build_h_lpqr, column_property_holds, h_grid, verify_conjugacy_identity
from .partitions import PartitionFamily, atoms, atoms_frame, locate, phi_action, refines
from .step_functions import StepFunction

__all__ = [
    "ABlockIndex",
    "BlockSlideMap",
    "Box",
    "CellPermutation",
    "ElementarySlide",
    "GridSpec",
    "PartitionFamily",
    "StepFunction",
    "atoms",
    "atoms_frame",
    "build_g",
    "build_h_lpqr",
    "build_psi",
    "column_property_holds",
    "commutes_with_phi",
    "compose_g",
    "h_grid",
    "locate",
    "maps_partition",
    "phi_action",
    "refines",
    "verify_conjugacy_identity",
]
