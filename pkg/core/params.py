"""
Exact stage parameters and the AbC parameter schedule.

A stage n carries the rotation number alpha_n = p_n / q_n together with the two
integers k_n, l_n that produce the next rotation number

    p_{n+1} = k_n l_n q_n p_n + 1,    q_{n+1} = k_n l_n q_n^2.

Every derived quantity (m_n, r_n, delta_n, epsilon_n) is an exact ``Fraction`` or
``int``.  p is kept as produced by the recursion, so alpha may exceed 1; rotations
act mod 1.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Sequence

import pandas as pd

import config
from errors import ParameterError, require

LOGGER = logging.getLogger(__name__)

SCHEMA = "abc-chain/1"
EPSILON_VARIANTS = ("prescribed", "planar", "higher", "strictest")


def frac_mod1(value: Fraction) -> Fraction:
    """Representative of ``value`` in [0, 1)."""
    return value - math.floor(value)


@dataclass(frozen=True)
class StageParams:
    """Exact state of one AbC stage."""

    n: int
    p: int
    q: int
    k: int
    l: int
    d: int = 2
    rho: float = 0.05
    epsilon_variant: str = "strictest"
    l_prev: int = 1

    def __post_init__(self) -> None:
        require(self.n >= 1, f"stage index must be >= 1, got n={self.n}")
        require(self.d >= 2, f"dimension must be >= 2, got d={self.d}")
        require(self.p >= 1 and self.q >= 1, f"p, q must be positive, got p={self.p}, q={self.q}")
        require(self.k >= 1 and self.l >= 1, f"k, l must be positive, got k={self.k}, l={self.l}")
        require(
            math.gcd(self.p, self.q) == 1,
            f"gcd(p, q) must be 1, got gcd({self.p}, {self.q}) = {math.gcd(self.p, self.q)}",
        )
        require(
            (self.k * self.l) % 2 == 0,
            f"k*l must be even so that m = kl/2 is an integer, got k={self.k}, l={self.l}",
        )
        require(self.rho > 0, f"rho must be positive, got {self.rho}")
        require(
            self.epsilon_variant in EPSILON_VARIANTS,
            f"unknown epsilon variant {self.epsilon_variant!r}; expected one of {EPSILON_VARIANTS}",
        )

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.p, self.q)

    @property
    def m(self) -> int:
        return self.k * self.l // 2

    @property
    def r(self) -> int:
        return (self.m * self.p) % self.q

    @property
    def delta(self) -> Fraction:
        return Fraction(1, self.n * self.q)

    @property
    def epsilon_variants(self) -> dict[str, Fraction]:
        block = self.l**self.d * self.q**2
        return {
            "prescribed": self.delta / (4 * block),
            "planar": self.delta / (8 * self.d * block),
            "higher": self.delta / (12 * self.d * block),
        }

    @property
    def epsilon(self) -> Fraction:
        variants = self.epsilon_variants
        if self.epsilon_variant == "strictest":
            return min(variants.values())
        return variants[self.epsilon_variant]

    @property
    def convergence_budget(self) -> Fraction:
        """Stage gap budget min(eps_n, 2^-q_n)."""
        return min(self.epsilon, Fraction(1, 2**self.q))

    @property
    def p_next(self) -> int:
        return self.k * self.l * self.q * self.p + 1

    @property
    def q_next(self) -> int:
        return self.k * self.l * self.q**2

    @property
    def alpha_next(self) -> Fraction:
        return Fraction(self.p_next, self.q_next)

    @property
    def leven_holds(self) -> bool:
        """Literal divisibility 2 * l_{n-1} * q_n | l_n, with l_0 = 1."""
        return self.l % (2 * self.l_prev * self.q) == 0

    @property
    def h_admissible(self) -> bool:
        """Whether l/(2q) is integral, as the A-block map requires."""
        return self.l % (2 * self.q) == 0

    def with_choice(self, k: int | None = None, l: int | None = None) -> "StageParams":
        return replace(self, k=self.k if k is None else k, l=self.l if l is None else l)

    def to_dict(self) -> dict[str, str]:
        payload = {key: str(value) for key, value in asdict(self).items()}
        payload.update(
            alpha=str(self.alpha),
            m=str(self.m),
            r=str(self.r),
            delta=str(self.delta),
            epsilon=str(self.epsilon),
        )
        return payload

    @classmethod
    def from_dict(cls, payload: dict[str, str]) -> "StageParams":
        try:
            stage = cls(
                n=int(payload["n"]),
                p=int(payload["p"]),
                q=int(payload["q"]),
                k=int(payload["k"]),
                l=int(payload["l"]),
                d=int(payload.get("d", "2")),
                rho=float(payload.get("rho", "0.05")),
                epsilon_variant=payload.get("epsilon_variant", "strictest"),
                l_prev=int(payload.get("l_prev", "1")),
            )
        except KeyError as err:
            raise ParameterError(f"stage record misses field {err.args[0]!r}") from err
        for key in ("m", "r", "alpha", "delta"):
            if key in payload:
                require(
                    str(getattr(stage, key)) == payload[key],
                    f"stored {key}={payload[key]} disagrees with recomputed {getattr(stage, key)}",
                )
        return stage


def _check_leven(stage: StageParams, strict: bool) -> None:
    if strict:
        require(
            stage.leven_holds,
            f"divisibility 2*l_prev*q | l fails at stage {stage.n}: "
            f"2*{stage.l_prev}*{stage.q} = {2 * stage.l_prev * stage.q} does not divide l={stage.l}",
        )
    elif not stage.leven_holds:
        LOGGER.debug(
            "stage %d: l=%d violates 2*l_prev*q | l (lenient mode)", stage.n, stage.l
        )


def seed_stage(
    p: int = config.SEED_P,
    q: int = config.SEED_Q,
    k: int = config.DEFAULT_K,
    l: int = config.DEFAULT_L,
    d: int = config.DEFAULT_DIMENSION,
    rho: float = config.DEFAULT_RHO,
    epsilon_variant: str = config.EPSILON_VARIANT,
    strict: bool = True,
) -> StageParams:
    """First stage of a chain."""
    stage = StageParams(
        n=1, p=p, q=q, k=k, l=l, d=d, rho=rho, epsilon_variant=epsilon_variant, l_prev=1
    )
    _check_leven(stage, strict)
    return stage


def next_stage(prev: StageParams, k: int, l: int, strict: bool = True) -> StageParams:
    """Stage n+1 from stage n; ``k``, ``l`` are the new stage's own choices."""
    require(k >= 1, f"k must be >= 1, got {k}")
    require(l >= 1, f"l must be >= 1, got {l}")
    stage = StageParams(
        n=prev.n + 1,
        p=prev.p_next,
        q=prev.q_next,
        k=k,
        l=l,
        d=prev.d,
        rho=prev.rho,
        epsilon_variant=prev.epsilon_variant,
        l_prev=prev.l,
    )
    _check_leven(stage, strict)
    return stage


@dataclass(frozen=True)
class IdentityReport:
    """Outcome of the two return identities, checked mod 1."""

    n: int
    passed: bool
    lhs_m: Fraction
    rhs_m: Fraction
    residual_m: Fraction
    lhs_m1: Fraction
    rhs_m1: Fraction
    residual_m1: Fraction

    def to_dict(self) -> dict[str, object]:
        return {key: str(value) if isinstance(value, Fraction) else value
                for key, value in asdict(self).items()}


def check_return_identities(
    s: StageParams, s_next: StageParams | None = None, r_override: int | None = None
) -> IdentityReport:
    """
    Check m*alpha' = r/q + 1/(2q^2) and (m+1)*alpha' = (r+p)/q + 1/(2q^2) + 1/q' in Q/Z.

    alpha' is the rotation of ``s_next``, or alpha_{n+1} of ``s`` itself when no successor
    is given.  ``r_override`` replaces r on the right-hand sides (negative controls).
    """
    r = s.r if r_override is None else r_override
    alpha_next = s.alpha_next if s_next is None else Fraction(s_next.p, s_next.q)
    q_next = s.q_next if s_next is None else s_next.q
    lhs_m = frac_mod1(s.m * alpha_next)
    rhs_m = frac_mod1(Fraction(r, s.q) + Fraction(1, 2 * s.q**2))
    lhs_m1 = frac_mod1((s.m + 1) * alpha_next)
    rhs_m1 = frac_mod1(Fraction(r + s.p, s.q) + Fraction(1, 2 * s.q**2) + Fraction(1, q_next))
    residual_m = frac_mod1(lhs_m - rhs_m)
    residual_m1 = frac_mod1(lhs_m1 - rhs_m1)
    return IdentityReport(
        n=s.n,
        passed=residual_m == 0 and residual_m1 == 0,
        lhs_m=lhs_m,
        rhs_m=rhs_m,
        residual_m=residual_m,
        lhs_m1=lhs_m1,
        rhs_m1=rhs_m1,
        residual_m1=residual_m1,
    )


def validate_l_condition(l: int, d: int, n: int, dh_norm_bound: float) -> bool:
    """Whether l exceeds d * n^2 * ||DH_{n-1}^{-1}||_0 (sampled bound)."""
    require(dh_norm_bound >= 1, f"derivative bound must be >= 1, got {dh_norm_bound}")
    return l > d * n * n * dh_norm_bound


@dataclass(frozen=True)
class ParamSchedule:
    """Ordered chain of stages with the sampled derivative witness used for l."""

    stages: tuple[StageParams, ...]
    l_bound_witness: tuple[float, ...] = field(default=())

    def __post_init__(self) -> None:
        require(len(self.stages) > 0, "a schedule needs at least one stage")
        if not self.l_bound_witness:
            object.__setattr__(self, "l_bound_witness", tuple(1.0 for _ in self.stages))
        require(
            len(self.l_bound_witness) == len(self.stages),
            f"{len(self.l_bound_witness)} witnesses for {len(self.stages)} stages",
        )
        for prev, nxt in zip(self.stages, self.stages[1:]):
            require(
                nxt.p == prev.p_next and nxt.q == prev.q_next and nxt.n == prev.n + 1,
                f"stage {nxt.n} is not the successor of stage {prev.n}: "
                f"expected (p, q) = ({prev.p_next}, {prev.q_next}), got ({nxt.p}, {nxt.q})",
            )

    def __len__(self) -> int:
        return len(self.stages)

    def __getitem__(self, index: int) -> StageParams:
        return self.stages[index]

    @property
    def d(self) -> int:
        return self.stages[0].d

    def identity_reports(self) -> list[IdentityReport]:
        """The last stage is checked against its own alpha_{n+1}."""
        successors = [*self.stages[1:], None]
        return [check_return_identities(s, nxt) for s, nxt in zip(self.stages, successors)]

    def l_conditions(self) -> list[bool]:
        return [
            validate_l_condition(s.l, s.d, s.n, witness)
            for s, witness in zip(self.stages, self.l_bound_witness)
        ]

    def with_witness(self, witness: Sequence[float]) -> "ParamSchedule":
        return ParamSchedule(stages=self.stages, l_bound_witness=tuple(float(w) for w in witness))

    def frame(self) -> pd.DataFrame:
        """One row per stage, exact values as strings."""
        rows = []
        for stage, witness in zip(self.stages, self.l_bound_witness):
            row = stage.to_dict()
            row.update(
                p_next=str(stage.p_next),
                q_next=str(stage.q_next),
                leven=str(stage.leven_holds),
                l_witness=repr(witness),
            )
            rows.append(row)
        return pd.DataFrame(rows)

    def to_json(self) -> str:
        return json.dumps(
            {
                "schema": SCHEMA,
                "d": str(self.d),
                "stages": [s.to_dict() for s in self.stages],
                "l_bound_witness": [repr(w) for w in self.l_bound_witness],
            },
            indent=2,
            sort_keys=True,
        )

    def write(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_json(cls, text: str) -> "ParamSchedule":
        try:
            payload = json.loads(text)
        except json.JSONDecodeError as err:
            raise ParameterError(f"stage chain is not valid JSON: {err}") from err
        require(
            payload.get("schema") == SCHEMA,
            f"unsupported chain schema {payload.get('schema')!r}, expected {SCHEMA!r}",
        )
        stages = tuple(StageParams.from_dict(item) for item in payload["stages"])
        witness = tuple(float(w) for w in payload.get("l_bound_witness", ()))
        return cls(stages=stages, l_bound_witness=witness)


def build_schedule(
    p1: int,
    q1: int,
    choices: Iterable[tuple[int, int]],
    d: int = config.DEFAULT_DIMENSION,
    rho: float = config.DEFAULT_RHO,
    epsilon_variant: str = config.EPSILON_VARIANT,
    strict: bool = True,
) -> ParamSchedule:
    """Chain seeded at p1/q1 with per-stage (k, l) choices."""
    choices = list(choices)
    require(len(choices) > 0, "at least one (k, l) choice is required")
    k1, l1 = choices[0]
    stages = [seed_stage(p1, q1, k1, l1, d=d, rho=rho, epsilon_variant=epsilon_variant, strict=strict)]
    for k, l in choices[1:]:
        stages.append(next_stage(stages[-1], k, l, strict=strict))
    LOGGER.info(
        "built %d-stage chain: q = %s", len(stages), ", ".join(str(s.q) for s in stages)
    )
    return ParamSchedule(stages=tuple(stages))
