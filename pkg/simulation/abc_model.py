"""
Stage assembly for the AbC construction.

h_n = h_{2,n} o h_{3,n} o ... o h_{d,n},  H_n = h_n o H_{n-1},
T_n = H_n^-1 o phi^(alpha_{n+1}) o H_n.

Exact mode keeps H_n and T_n as cell permutations of one stage grid; analytic mode
keeps H_n as an evaluation stack of mollified slides and never materializes it.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

import config
from analytic.norms import d_rho
from analytic.torus_maps import AnalyticTorusMap, ClosenessReport, build_h_analytic, closeness_report
from combinatorics.blockslide import BlockSlideMap, commutes_with_phi, compose_g
from combinatorics.grid import CellPermutation, GridSpec
from combinatorics.hmap import build_h_lpqr, h_grid
from combinatorics.partitions import PartitionFamily
from core.params import StageParams
from errors import BudgetError, ParameterError, require

LOGGER = logging.getLogger(__name__)

MODES = ("exact", "analytic", "both")
PLANAR_MODELS = ("h", "g")


def _uses_exact(mode: str) -> bool:
    return mode in ("exact", "both")


def _uses_analytic(mode: str) -> bool:
    return mode in ("analytic", "both")


@dataclass(frozen=True, eq=False)
class ConjugationStack:
    """Per-stage conjugators h_1, ..., h_n and their composite H_n."""

    d: int
    mode: str = "exact"
    exact: tuple[CellPermutation, ...] = ()
    analytic: tuple[AnalyticTorusMap, ...] = ()
    composite: CellPermutation | None = None

    @classmethod
    def empty(cls, d: int, mode: str = "exact") -> "ConjugationStack":
        composite = CellPermutation.identity(GridSpec.trivial(d), "H_0") if _uses_exact(mode) else None
        return cls(d, mode, composite=composite)

    @property
    def depth(self) -> int:
        return max(len(self.exact), len(self.analytic))

    @property
    def grid(self) -> GridSpec:
        return self.composite.grid if self.composite is not None else GridSpec.trivial(self.d)

    @property
    def analytic_map(self) -> AnalyticTorusMap:
        """H_n as a stack: h_1 acts first."""
        result = AnalyticTorusMap.identity(self.d)
        for h in self.analytic:
            result = result.then(h)
        return result

    def extend(
        self, h_exact: CellPermutation | None, h_analytic: AnalyticTorusMap | None, grid: GridSpec | None = None
    ) -> "ConjugationStack":
        exact, analytic, composite = self.exact, self.analytic, self.composite
        if h_exact is not None:
            grid = self.grid.lcm(h_exact.grid) if grid is None else grid
            lifted = h_exact.on(grid)
            composite = lifted if composite is None else lifted.compose(composite.on(grid))
            exact = exact + (h_exact,)
        if h_analytic is not None:
            analytic = analytic + (h_analytic,)
        return ConjugationStack(self.d, self.mode, exact, analytic, composite)


@dataclass(frozen=True, eq=False)
class StageMap:
    """T_n together with the conjugation stack it was built from."""

    params: StageParams
    stack: ConjugationStack
    model: BlockSlideMap | None = None
    permutation: CellPermutation | None = None
    analytic: AnalyticTorusMap | None = None
    checks: dict[str, bool] = field(default_factory=dict)
    closeness: ClosenessReport | None = None

    @property
    def n(self) -> int:
        return self.params.n

    @property
    def grid(self) -> GridSpec | None:
        return self.permutation.grid if self.permutation is not None else None

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    @property
    def conjugator(self) -> CellPermutation | None:
        return self.stack.composite

    def analytic_inverse(self) -> AnalyticTorusMap:
        require(self.analytic is not None, f"stage {self.n} was built without analytic maps")
        return self.analytic.inverse()

    def bad_mask(self, points: np.ndarray) -> np.ndarray:
        """Points whose analytic orbit under T_n passes a jump neighbourhood."""
        require(self.analytic is not None, f"stage {self.n} was built without analytic maps")
        return self.analytic.bad_mask(points)

    def summary(self) -> dict[str, object]:
        return {
            "n": self.n,
            "p": self.params.p,
            "q": self.params.q,
            "k": self.params.k,
            "l": self.params.l,
            "q_next": self.params.q_next,
            "grid": list(self.grid.shape) if self.grid is not None else None,
            "cells": self.grid.n_cells if self.grid is not None else None,
            "checks": dict(self.checks),
        }


def planar_model(params: StageParams, planar: str) -> BlockSlideMap:
    """Slide part of h_n: g_3 o ... o g_d under ``planar="h"``, g_2 o ... o g_d under ``"g"``."""
    down_to = 2 if planar == "g" else 3
    if down_to > params.d:
        return BlockSlideMap(params.d, (), "id")
    return compose_g(params.l, params.q, params.d, modified=True, down_to=down_to)


def stage_grid(params: StageParams, prev: ConjugationStack, planar: str) -> GridSpec:
    """Grid of T_n, computed from denominators only."""
    grid = prev.grid
    if params.l > 1:
        grid = grid.lcm(planar_model(params, planar).natural_grid())
        if planar == "h":
            grid = grid.lcm(h_grid(params.l, params.q, params.d))
        grid = grid.refine_axis(0, params.q)
    return grid.refine_axis(0, params.q_next)


def _stage_conjugator(params: StageParams, planar: str, grid: GridSpec) -> CellPermutation:
    slides = planar_model(params, planar).to_permutation(grid)
    if planar == "g":
        return CellPermutation(grid, slides.image, f"h_{params.n}")
    blocks = build_h_lpqr(params.l, params.p, params.q, params.r, params.d).on(grid)
    h = blocks.compose(slides)
    return CellPermutation(grid, h.image, f"h_{params.n}")


def pulled_back_stripes_permuted(T: CellPermutation, H: CellPermutation, q_next: int, p_next: int) -> bool:
    """T_n moves every atom of H_n^-1 T_{q_{n+1}} to the atom p_{n+1} further on."""
    labels = PartitionFamily.T(q_next, H.grid.d).labels_on(H.grid)[H.image]
    return bool(np.array_equal(labels[T.image], (labels + p_next) % q_next))


def build_stage(
    params: StageParams,
    prev: ConjugationStack | None = None,
    mode: str = "exact",
    planar: str = config.PLANAR_MODEL,
    cell_budget: int = config.CELL_BUDGET,
    eps: float | None = None,
    delta: float | None = None,
    samples: int = config.SAMPLES,
    seed: int = config.RANDOM_SEED,
) -> StageMap:
    """
    Build T_n on top of ``prev`` (H_{n-1}).

    Raises ``BudgetError`` before any allocation when the stage grid is too large.
    """
    require(mode in MODES, f"mode must be one of {MODES}, got {mode!r}")
    require(planar in PLANAR_MODELS, f"planar model must be one of {PLANAR_MODELS}, got {planar!r}")
    require(
        not (_uses_analytic(mode) and planar == "h" and params.l > 1),
        "the analytic realization tracks the slide model; use planar='g' with analytic modes",
    )
    prev = ConjugationStack.empty(params.d, mode) if prev is None else prev
    require(prev.d == params.d, f"stack dimension {prev.d} differs from stage dimension {params.d}")
    require(prev.depth == params.n - 1, f"stage {params.n} needs a stack of depth {params.n - 1}, got {prev.depth}")
    model = planar_model(params, planar) if params.l > 1 else BlockSlideMap(params.d, (), "id")
    checks: dict[str, bool] = {}
    LOGGER.info("Building stage %d: p=%d q=%d k=%d l=%d (%s)", params.n, params.p, params.q, params.k, params.l, mode)

    h_exact = permutation = None
    stack_grid = None
    if _uses_exact(mode):
        grid = stage_grid(params, prev, planar)
        if grid.n_cells > cell_budget:
            raise BudgetError(grid.n_cells, cell_budget, grid.shape)
        if params.l > 1:
            h_exact = _stage_conjugator(params, planar, grid)
        else:
            h_exact = CellPermutation.identity(grid, f"h_{params.n}")
        checks["h_commutes_with_rotation"] = commutes_with_phi(h_exact, params.q)
        stack_grid = grid

    h_analytic = closeness = None
    if _uses_analytic(mode):
        eps = float(params.epsilon) if eps is None else eps
        delta = float(params.delta) if delta is None else delta
        h_analytic = build_h_analytic(model, params.q, eps, delta)
        h_analytic = AnalyticTorusMap(params.d, h_analytic.steps, f"h_{params.n}")
        closeness = closeness_report(h_analytic, model, eps, delta, params.q, samples, seed)
        checks["analytic_h_commutes_with_rotation"] = closeness.commutation_residual < 1e-10
        checks["analytic_h_close_to_model"] = closeness.passed

    stack = prev.extend(h_exact, h_analytic, stack_grid)
    if _uses_exact(mode):
        H = stack.composite
        rotation = CellPermutation.rotation(H.grid, params.alpha_next)
        permutation = CellPermutation(
            H.grid, H.inverse().compose(rotation.compose(H)).image, f"T_{params.n}"
        )
        checks["T_power_is_identity"] = permutation.power(params.q_next).is_identity()
        checks["T_permutes_pulled_back_stripes"] = pulled_back_stripes_permuted(
            permutation, H, params.q_next, params.p_next
        )
        LOGGER.info("Stage %d grid %s (%d cells)", params.n, H.grid.shape, H.grid.n_cells)

    analytic = None
    if _uses_analytic(mode):
        H_map = stack.analytic_map
        analytic = AnalyticTorusMap(
            params.d,
            H_map.then(AnalyticTorusMap.rotation(params.d, params.alpha_next)).then(H_map.inverse()).steps,
            f"T_{params.n}",
        )

    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        LOGGER.warning("Stage %d failed checks: %s", params.n, ", ".join(failed))
    return StageMap(params, stack, model, permutation, analytic, checks, closeness)


@dataclass(frozen=True)
class KChoice:
    k: int
    passed: bool
    certificates: tuple[tuple[int, float], ...]

    def to_dict(self) -> dict[str, object]:
        return {
            "k": self.k,
            "passed": self.passed,
            "certificates": [{"k": k, "d_rho": gap} for k, gap in self.certificates],
        }


def choose_kn(
    draft: StageParams,
    prev: StageMap | None = None,
    rho: float = config.DEFAULT_RHO,
    epsilon_budget: float | None = None,
    k_ceiling: int = config.K_CEILING,
    planar: str = "g",
    samples: int = config.SAMPLES,
    seed: int = config.RANDOM_SEED,
) -> KChoice:
    """
    Doubling search for the smallest k with d_rho(T_n, T_{n-1}) below the budget.

    Returns the ceiling with ``passed=False`` when no tested k meets the budget.
    """
    budget = float(draft.convergence_budget) if epsilon_budget is None else epsilon_budget
    if prev is None:
        previous = AnalyticTorusMap.rotation(draft.d, draft.alpha)
        stack = ConjugationStack.empty(draft.d, "analytic")
    else:
        require(prev.analytic is not None, f"stage {prev.n} has no analytic map to compare against")
        previous = prev.analytic
        stack = prev.stack
    certificates: list[tuple[int, float]] = []
    k = draft.k
    while True:
        stage = build_stage(draft.with_choice(k=k), stack, mode="analytic", planar=planar, samples=samples, seed=seed)
        gap = d_rho(stage.analytic, previous, rho, samples, seed)
        certificates.append((k, gap))
        LOGGER.debug("k=%d: d_rho=%.3g (budget %.3g)", k, gap, budget)
        if gap < budget:
            return KChoice(k, True, tuple(certificates))
        if 2 * k > k_ceiling:
            LOGGER.warning("No k up to %d meets the budget %.3g at stage %d", k_ceiling, budget, draft.n)
            return KChoice(k, False, tuple(certificates))
        k *= 2


def evaluate(
    T: StageMap, x: Sequence[Fraction | float], iterates: int, mode: str = "exact"
) -> list[tuple[Fraction, ...]] | np.ndarray:
    """Orbit x, Tx, ..., T^iterates x; negative counts walk backwards."""
    if abs(iterates) > config.ORBIT_BOUND:
        raise ParameterError(f"orbit length {abs(iterates)} exceeds the bound {config.ORBIT_BOUND}")
    if mode == "exact":
        require(T.permutation is not None, f"stage {T.n} was built without exact maps")
        step = T.permutation if iterates >= 0 else T.permutation.inverse()
        orbit = [tuple(Fraction(v) - math.floor(Fraction(v)) for v in x)]
        for _ in range(abs(iterates)):
            orbit.append(step.apply_point(orbit[-1]))
        return orbit
    require(mode == "analytic", f"orbit mode must be 'exact' or 'analytic', got {mode!r}")
    step = T.analytic if iterates >= 0 else T.analytic_inverse()
    require(step is not None, f"stage {T.n} was built without analytic maps")
    point = np.mod(np.asarray(x, dtype=float).reshape(1, -1), 1.0)
    orbit = [point[0]]
    for _ in range(abs(iterates)):
        point = np.mod(step(point), 1.0)
        orbit.append(point[0])
    return np.array(orbit)


def build_chain(
    stages: Sequence[StageParams],
    mode: str = "exact",
    planar: str = config.PLANAR_MODEL,
    cell_budget: int = config.CELL_BUDGET,
    exact_stages: int | None = None,
    samples: int = config.SAMPLES,
    seed: int = config.RANDOM_SEED,
) -> list[StageMap]:
    """Build stages in order; stages past ``exact_stages`` drop the exact layer."""
    maps: list[StageMap] = []
    stack: ConjugationStack | None = None
    for index, params in enumerate(stages):
        stage_mode = mode
        if exact_stages is not None and index >= exact_stages and _uses_exact(mode):
            if mode == "exact":
                break
            stage_mode = "analytic"
        if stack is not None and stage_mode != stack.mode:
            stack = ConjugationStack(stack.d, stage_mode, (), stack.analytic, None)
        stage = build_stage(params, stack, stage_mode, planar, cell_budget, samples=samples, seed=seed)
        maps.append(stage)
        stack = stage.stack
    return maps
