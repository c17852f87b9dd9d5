"""
Stage engine, towers and speed-of-approximation reports.
"""

from .abc_model import ConjugationStack, KChoice, StageMap, build_chain, build_stage, choose_kn, evaluate
from .metrics import (
    CoverageReport,
    ExceptionalSetReport,
    LevelCoverage,
    SpeedReport,
    exceptional_set_report,
    good_domain_sweep,
    partition_refinement_stats,
    speed_frame,
    speed_report,
)
from .towers import (
    CrossSection,
    PeriodicProcess,
    StripeSet,
    Tower,
    TowerBase,
    build_cyclic_tower,
    build_hh1_towers,
    pull_back_base,
    weak_distance,
    weak_distance_sampled,
)

__all__ = [
    "ConjugationStack",
    "CoverageReport",
    "CrossSection",
    "ExceptionalSetReport",
    "KChoice",
    "LevelCoverage",
    "PeriodicProcess",
    "SpeedReport",
    "StageMap",
    "StripeSet",
    "Tower",
    "TowerBase",
    "build_chain",
    "build_cyclic_tower",
    "build_hh1_towers",
    "build_stage",
    "choose_kn",
    "evaluate",
    "exceptional_set_report",
    "good_domain_sweep",
    "partition_refinement_stats",
    "pull_back_base",
    "speed_frame",
    "speed_report",
    "weak_distance",
    "weak_distance_sampled",
]
