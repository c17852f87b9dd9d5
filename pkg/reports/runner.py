"""
Run orchestration: build the stage chain, verify it and collect one report.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

import config
from analytic.good_domain import GoodDomain
from analytic.norms import d_rho, derivative_norm, strip_norm_curve
from analytic.torus_maps import AnalyticTorusMap, closeness_samples, stack
from combinatorics.hmap import verify_conjugacy_identity
from core.params import ParamSchedule, StageParams
from errors import LevelCollisionError, ParameterError
from reports.figures import render_figures
from reports.run_config import RunConfig
from reports.tables import write_tables
from simulation.abc_model import StageMap, build_chain, choose_kn
from simulation.metrics import (
    CoverageReport,
    SpeedReport,
    exceptional_set_report,
    good_domain_sweep,
    partition_refinement_stats,
    speed_report,
)
from simulation.towers import (
    PeriodicProcess,
    build_cyclic_tower,
    build_hh1_towers,
    pulled_back_towers_agree,
    weak_distance_sampled,
)
from spectral.density import spectral_measure_estimate
from spectral.koopman import correlations, stage_rotation, tower_observables
from spectral.weak_limit import fit_weak_limit, kappa_statistic

LOGGER = logging.getLogger(__name__)

REPORT_SCHEMA = "abc-report/1"


@dataclass(frozen=True)
class Check:
    """One verdict with the relation that was checked and both of its sides."""

    name: str
    stage: int
    relation: str
    lhs: str
    rhs: str
    passed: bool

    def to_dict(self) -> dict[str, object]:
        return {
            "name": self.name,
            "stage": self.stage,
            "relation": self.relation,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "passed": self.passed,
        }


def _holds(name: str, stage: int, value: bool, relation: str = "holds") -> Check:
    return Check(name, stage, relation, str(bool(value)), "True", bool(value))


@dataclass(frozen=True)
class RunReport:
    name: str
    settings: dict[str, object]
    schedule: dict[str, object]
    stages: list[dict[str, object]] = field(default_factory=list)
    checks: list[Check] = field(default_factory=list)
    speed: list[dict[str, object]] = field(default_factory=list)
    coverage: list[dict[str, object]] = field(default_factory=list)
    exceptional: list[dict[str, object]] = field(default_factory=list)
    sampled: list[dict[str, object]] = field(default_factory=list)
    analytic: list[dict[str, object]] = field(default_factory=list)
    spectral: list[dict[str, object]] = field(default_factory=list)
    layouts: dict[str, object] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failed(self) -> list[Check]:
        return [check for check in self.checks if not check.passed]

    @property
    def is_empty(self) -> bool:
        return not self.stages

    def to_dict(self) -> dict[str, object]:
        return {
            "schema": REPORT_SCHEMA,
            "name": self.name,
            "settings": self.settings,
            "schedule": self.schedule,
            "stages": self.stages,
            "checks": [check.to_dict() for check in self.checks],
            "speed": self.speed,
            "coverage": self.coverage,
            "exceptional": self.exceptional,
            "sampled": self.sampled,
            "analytic": self.analytic,
            "spectral": self.spectral,
            "layouts": self.layouts,
            "notes": self.notes,
            "passed": self.passed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def write(self, path: Path) -> None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json(), encoding="utf-8")

    @classmethod
    def from_dict(cls, payload: dict[str, object]) -> "RunReport":
        if payload.get("schema") != REPORT_SCHEMA:
            raise ParameterError(f"unsupported report schema {payload.get('schema')!r}, expected {REPORT_SCHEMA!r}")
        return cls(
            name=payload["name"],
            settings=payload["settings"],
            schedule=payload["schedule"],
            stages=payload["stages"],
            checks=[Check(**item) for item in payload["checks"]],
            speed=payload["speed"],
            coverage=payload["coverage"],
            exceptional=payload.get("exceptional", []),
            sampled=payload["sampled"],
            analytic=payload.get("analytic", []),
            spectral=payload["spectral"],
            layouts=payload["layouts"],
            notes=payload.get("notes", []),
        )

    @classmethod
    def read(cls, path: str | Path) -> "RunReport":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as err:
            raise ParameterError(f"report {path} is not valid JSON: {err}") from err
        return cls.from_dict(payload)


def _stripe_count(process: PeriodicProcess) -> int:
    return sum(tower.height * len(tower.base.stripes) for tower in process.towers)


def _speed_checks(report: SpeedReport, kind: str) -> list[Check]:
    total = sum(report.discrepancies.values(), start=Fraction(0))
    sides = {
        "distance_is_sum_of_top_discrepancies": ("d(xi, T, sigma) == sum of top discrepancies", report.weak_distance, total),
        "cyclic_tower_returns_exactly": ("d(xi, T, sigma) == 0", report.weak_distance, 0),
        "one_sided_defect_within_3q_over_q_next": ("one-sided defect <= 3q / q_{n+1}", report.one_sided, report.one_sided_bound),
        "symmetric_distance_within_6q_over_q_next": ("d(xi, T, sigma) <= 6q / q_{n+1}", report.weak_distance, report.symmetric_bound),
        "ratio_within_bound": ("h * one-sided defect <= ratio bound", report.ratio, report.ratio_bound),
    }
    checks = []
    for name, ok in report.checks.items():
        relation, lhs, rhs = sides[name]
        checks.append(Check(f"{kind}:{name}", report.n, relation, str(lhs), str(rhs), ok))
    return checks


def _coverage_checks(report: CoverageReport) -> list[Check]:
    checks = [
        Check(
            f"{report.kind}:good_level_mass",
            report.n,
            "good measure in level units >= level bound",
            str(report.level_mass),
            str(report.level_bound),
            report.level_mass >= report.level_bound,
        ),
        Check(
            f"{report.kind}:coverage",
            report.n,
            "measure of good levels >= coverage target",
            str(report.covered),
            str(report.coverage_target),
            report.covered >= report.coverage_target,
        ),
    ]
    for label, ok in report.substantial.items():
        checks.append(_holds(f"{report.kind}:{label}_substantial", report.n, ok, "height * level measure >= fraction * cross-section"))
    return checks


def _tower_layout(process: PeriodicProcess) -> list[dict[str, object]]:
    return [
        {
            "n": process.stage.n,
            "kind": process.kind,
            "label": tower.label,
            "height": tower.height,
            "step": str(Fraction(tower.step, tower.base.stripes.denominator)),
            "stripes": [[str(lo), str(hi)] for lo, hi in tower.base.stripes.x1_bounds()],
        }
        for tower in process.towers
    ]


def _process_checks(process: PeriodicProcess, stage_map: StageMap | None) -> list[Check]:
    n = process.stage.n
    if _stripe_count(process) > config.EXHAUSTIVE_LEVELS:
        LOGGER.info("Stage %d %s: %d stripes, level sweeps skipped", n, process.kind, _stripe_count(process))
        return []
    checks = [_holds(f"{process.kind}:eta_coarser_than_xi", n, process.eta_coarser_than_xi())]
    try:
        process.check_disjoint()
        checks.append(_holds(f"{process.kind}:levels_disjoint", n, True))
    except LevelCollisionError as err:
        LOGGER.warning("Stage %d: %s", n, err)
        checks.append(Check(f"{process.kind}:levels_disjoint", n, str(err), "False", "True", False))
    if stage_map is not None and stage_map.permutation is not None and stage_map.grid.n_cells <= config.PULLBACK_CELLS:
        checks.append(_holds(f"{process.kind}:pulled_back_towers_agree", n, pulled_back_towers_agree(process, stage_map)))
    return checks


def _sampled_distance(process: PeriodicProcess, stage_map: StageMap, run: RunConfig) -> dict[str, object]:
    """Weak distance of the analytic T_n, with atoms located through the analytic H_n."""
    H = stage_map.stack.analytic_map

    def locate(points: np.ndarray) -> np.ndarray:
        return process.locate(np.mod(H(points), 1.0))

    sampled = weak_distance_sampled(locate, stage_map.analytic, process.sigma(), process.stage.d, run.samples, run.seed)
    payload = sampled.to_dict()
    payload.update(n=process.stage.n, kind=process.kind)
    return payload


def _spectral_summary(process: PeriodicProcess, run: RunConfig) -> dict[str, object] | None:
    stage = process.stage
    if stage.q_next > config.SPECTRAL_ARCS or stage.m < 2:
        LOGGER.info("Stage %d: skipping Koopman diagnostics on %d arcs", stage.n, stage.q_next)
        return None
    system = stage_rotation(process)
    observables = tower_observables(process, range(min(config.SPECTRAL_LEVELS, stage.m + 1)))
    summary: dict[str, object] = {"n": stage.n, "arcs": stage.q_next, "h": stage.m}
    try:
        fits = {
            "even": fit_weak_limit(system, observables[0::2], stage.m, run.tolerance),
            "odd": fit_weak_limit(system, observables[1::2], stage.m, run.tolerance),
        }
        summary["weak_limit"] = {key: fit.to_dict() for key, fit in fits.items()}
        summary["r_spread"] = abs(fits["even"].r - fits["odd"].r)
    except ParameterError as err:
        LOGGER.warning("Stage %d weak-limit fit failed: %s", stage.n, err)
        summary["weak_limit"] = None

    masks = [f.values > 0 for f in observables]
    pairs = [(a, b) for i, a in enumerate(masks) for b in masks[i:]]
    try:
        summary["kappa"] = kappa_statistic(system, pairs, stage.m).to_dict()
    except ParameterError as err:
        LOGGER.warning("Stage %d kappa statistic failed: %s", stage.n, err)
        summary["kappa"] = None

    lags = min(config.SPECTRAL_LAGS, stage.q_next - 1)
    corr = correlations(system, observables[0], lags)
    density = spectral_measure_estimate(corr)
    summary["correlations"] = corr.values.real.tolist()
    summary["density"] = {
        "label": density.label,
        "theta": density.theta.tolist(),
        "values": density.density.tolist(),
        "mass": density.mass,
    }
    return summary


def _analytic_diagnostics(
    stage_map: StageMap, previous: StageMap | None, run: RunConfig
) -> tuple[dict[str, object], float, list[Check]]:
    """
    d_rho(T_n, T_{n-1}) against the convergence budget, the derivative witness
    ||DH_{n-1}^-1||_0 for the choice of l, strip norms of T_n and sampled points of h_n.
    """
    stage = stage_map.params
    n, d = stage.n, stage.d
    if n == 1:
        earlier = AnalyticTorusMap.rotation(d, stage.alpha)
    else:
        earlier = previous.analytic if previous is not None else None
    budget = float(stage.convergence_budget)
    summary: dict[str, object] = {"n": n, "budget": budget, "d_rho": None}
    checks = []
    if earlier is not None:
        gap = float(d_rho(stage_map.analytic, earlier, run.rho, run.samples, run.seed))
        summary["d_rho"] = gap
        checks.append(
            Check("d_rho_within_budget", n, "d_rho(T_n, T_{n-1}) < min(eps_n, 2^-q_n)", repr(gap), repr(budget), gap < budget)
        )
        if gap >= budget:
            LOGGER.warning("Stage %d: d_rho = %.3g misses the budget %.3g", n, gap, budget)

    if run.k_search and earlier is not None:
        choice = choose_kn(stage, previous, run.rho, planar=run.planar, samples=run.samples, seed=run.seed)
        summary["k_search"] = choice.to_dict()
        checks.append(
            Check(
                "k_search_meets_budget",
                n,
                "smallest doubled k with d_rho < budget",
                repr(float(choice.certificates[-1][1])),
                repr(budget),
                choice.passed,
            )
        )

    witness = derivative_norm(stack(stage_map.stack.analytic[:-1], d).inverse(), run.samples, seed=run.seed)
    summary["dh_inverse"] = witness.to_dict()

    rhos = [float(rho) for rho in np.linspace(0.0, run.rho, config.STRIP_WIDTHS)]
    curve = strip_norm_curve(stage_map.analytic.displacement, rhos, run.samples, d, run.seed)
    summary["strip_norm"] = [{"rho": rho, "norm": norm} for rho, norm in curve]

    x, error, near_jump = closeness_samples(stage_map.stack.analytic[-1], stage_map.model, config.SAMPLING_ROWS, run.seed)
    good = GoodDomain.from_stage(stage).contains(x)
    summary["sampling"] = [
        {"x": [float(v) for v in point], "error": float(e), "near_jump": bool(j), "good_domain": bool(g)}
        for point, e, j, g in zip(x, error, near_jump, good)
    ]
    return summary, max(1.0, witness.sup), checks


def _l_condition_checks(schedule: ParamSchedule, analytic_stages: set[int]) -> list[Check]:
    checks = []
    for stage, witness, ok in zip(schedule.stages, schedule.l_bound_witness, schedule.l_conditions()):
        if stage.n in analytic_stages:
            bound = stage.d * stage.n**2 * witness
            checks.append(
                Check("l_exceeds_d_n2_DH_inverse", stage.n, "l > d n^2 ||DH_{n-1}^-1||_0", str(stage.l), repr(bound), ok)
            )
    return checks


def _stage_checks(stage: StageParams, stage_map: StageMap | None, run: RunConfig) -> list[Check]:
    checks = []
    if stage_map is not None:
        checks.extend(_holds(name, stage.n, ok) for name, ok in stage_map.checks.items())
    if stage_map is not None and stage_map.permutation is not None and run.planar == "h" and stage.h_admissible:
        conjugacy = verify_conjugacy_identity(stage)
        checks.append(
            Check("block_identity", stage.n, "failing A-blocks == 0", str(conjugacy.failures), "0", conjugacy.passed)
        )
    return checks


def run(run_config: RunConfig, write: bool = True) -> RunReport:
    """
    Execute every stage in order and assemble the report.

    Raises ``ConfigError`` before any compute and ``BudgetError`` when a stage grid
    exceeds the cell budget.
    """
    schedule: ParamSchedule = run_config.validate()
    LOGGER.info("Run %s: %d stage(s), mode=%s", run_config.name, len(schedule), run_config.mode)
    maps = build_chain(
        schedule.stages,
        mode=run_config.mode,
        planar=run_config.planar,
        cell_budget=run_config.cell_budget,
        exact_stages=run_config.exact_stages,
        samples=run_config.samples,
        seed=run_config.seed,
    )
    by_stage = {stage_map.n: stage_map for stage_map in maps}

    checks: list[Check] = []
    speed: list[SpeedReport] = []
    coverage, exceptional, sampled, spectral, towers = [], [], [], [], []
    analytic: list[dict[str, object]] = []
    witnesses = [1.0] * len(schedule)
    for identity in schedule.identity_reports():
        checks.append(
            Check(
                "return_identities",
                identity.n,
                "m alpha' and (m+1) alpha' mod 1",
                f"{identity.lhs_m}, {identity.lhs_m1}",
                f"{identity.rhs_m}, {identity.rhs_m1}",
                identity.passed,
            )
        )

    for stage in schedule.stages:
        stage_map = by_stage.get(stage.n)
        checks.extend(_stage_checks(stage, stage_map, run_config))
        if stage_map is not None and stage_map.analytic is not None:
            diagnostics, witness, found = _analytic_diagnostics(stage_map, by_stage.get(stage.n - 1), run_config)
            analytic.append(diagnostics)
            witnesses[stage.n - 1] = witness
            checks.extend(found)
        processes = [build_cyclic_tower(stage, check_disjoint=False)]
        if stage.q >= 2:
            processes.insert(0, build_hh1_towers(stage, run_config.placement, check_disjoint=False))
        for process in processes:
            small = _stripe_count(process) <= config.EXHAUSTIVE_LEVELS
            if len(process.towers[0].base.stripes) <= config.LAYOUT_STRIPES:
                towers.extend(_tower_layout(process))
            checks.extend(_process_checks(process, stage_map))
            pace = speed_report(process, exhaustive=small)
            speed.append(pace)
            checks.extend(_speed_checks(pace, process.kind))
            if small:
                sweep = good_domain_sweep(process)
                stats = partition_refinement_stats(process, sweep=sweep)
                coverage.append(stats.to_dict())
                checks.extend(_coverage_checks(stats))
                hole = exceptional_set_report(process, run_config.samples, run_config.seed, sweep)
                exceptional.append(hole.to_dict())
                checks.append(
                    Check(
                        f"{process.kind}:exceptional_set_sampled",
                        stage.n,
                        f"|sampled mu(E_n) - mu(E_n)| <= {hole.tolerance:.3g}",
                        repr(hole.sampled_measure),
                        str(hole.measure),
                        hole.passed,
                    )
                )
            if small and stage_map is not None and stage_map.analytic is not None:
                sampled.append(_sampled_distance(process, stage_map, run_config))
        if run_config.spectral and processes[0].kind == "hh1":
            summary = _spectral_summary(processes[0], run_config)
            if summary is not None:
                spectral.append(summary)
                if summary.get("weak_limit"):
                    consistent = all(fit["consistent"] for fit in summary["weak_limit"].values())
                    checks.append(_holds("weak_limit_consistent", stage.n, consistent, "0 < r < 1 and residual < tolerance"))

    if analytic:
        schedule = schedule.with_witness(witnesses)
        checks.extend(_l_condition_checks(schedule, {item["n"] for item in analytic}))

    notes = []
    if run_config.planar == "g":
        notes.append(
            "planar = g: stage conjugators use the slide model g_n in place of h_{l,p,q,r}; "
            "the A-block map is realized only by exact runs with planar = h"
        )
        LOGGER.warning("Run %s: %s", run_config.name, notes[-1])

    first = schedule.stages[0]
    layouts: dict[str, object] = {"towers": towers}
    if run_config.planar == "h" and first.h_admissible:
        layouts["h_pattern"] = {"l": first.l, "p": first.p, "q": first.q, "r": first.r}

    settings = run_config.to_dict()
    settings.pop("output_dir")
    report = RunReport(
        name=run_config.name,
        settings=settings,
        schedule=json.loads(schedule.to_json()),
        stages=[stage_map.summary() for stage_map in maps],
        checks=checks,
        speed=[item.to_dict() for item in speed],
        coverage=coverage,
        exceptional=exceptional,
        sampled=sampled,
        analytic=analytic,
        spectral=spectral,
        layouts=layouts,
        notes=notes,
    )
    LOGGER.info("Run %s: %d checks, %d failed", run_config.name, len(checks), len(report.failed))
    if write:
        write_outputs(report, run_config.output_dir, run_config.figures)
    return report


def write_outputs(report: RunReport, out_dir: Path, figures: bool = True) -> list[Path]:
    """JSON report, CSV tables and, when asked, SVG figures."""

    out_dir = Path(out_dir)
    path = out_dir / "report.json"
    report.write(path)
    written = [path, *write_tables(report, out_dir)]
    if figures:
        written.extend(render_figures(report, out_dir))
    LOGGER.info("Wrote %d files to %s", len(written), out_dir)
    return written
