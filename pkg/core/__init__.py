"""
Exact stage arithmetic for the AbC construction.
"""

from .params import (
    IdentityReport,
    ParamSchedule,
    StageParams,
    build_schedule,
    check_return_identities,
    frac_mod1,
    next_stage,
    seed_stage,
    validate_l_condition,
)

__all__ = [
    "IdentityReport",
    "ParamSchedule",
    "StageParams",
    "build_schedule",
    "check_return_identities",
    "frac_mod1",
    "next_stage",
    "seed_stage",
    "validate_l_condition",
]
