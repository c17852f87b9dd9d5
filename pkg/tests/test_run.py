"""Run configuration, orchestration, report artifacts and the CLI."""

from fractions import Fraction
from pathlib import Path

import pytest

import config
from core.params import StageParams
from errors import ConfigError
from reports.figures import plot_h_pattern, plot_tower_schematic, render_figures
from reports.run_config import RunConfig
from reports.runner import RunReport, _tower_layout, run
from scripts.abc_lab import EXIT_CONFIG, EXIT_OK, main
from simulation.towers import build_hh1_towers
from utils.presets import PresetManager

PRESETS = Path(__file__).resolve().parents[1] / "config" / "presets"


def minimal_payload(tmp_path, **overrides):
    payload = {
        "name": "minimal",
        "d": 2,
        "p1": 1,
        "q1": 3,
        "mode": "exact",
        "spectral": False,
        "stages": [{"k": 2, "l": 6}],
        "output_dir": str(tmp_path),
    }
    payload.update(overrides)
    return payload


def test_minimal_run_passes_every_check(tmp_path):
    report = run(RunConfig.from_mapping(minimal_payload(tmp_path)), write=False)
    assert report.passed, [check.to_dict() for check in report.failed]
    names = {check.name for check in report.checks}
    assert {
        "return_identities",
        "block_identity",
        "T_power_is_identity",
        "hh1:levels_disjoint",
        "hh1:pulled_back_towers_agree",
        "hh1:distance_is_sum_of_top_discrepancies",
        "hh1:good_level_mass",
        "hh1:exceptional_set_sampled",
        "cyclic:cyclic_tower_returns_exactly",
        "cyclic:exceptional_set_sampled",
    } <= names
    assert not report.notes
    hh1 = next(row for row in report.speed if row["kind"] == "hh1")
    assert hh1["weak_distance"] == "1/27"
    assert report.layouts["h_pattern"] == {"l": 6, "p": 1, "q": 3, "r": 0}


def test_every_verdict_carries_both_sides(tmp_path):
    report = run(RunConfig.from_mapping(minimal_payload(tmp_path)), write=False)
    ratio = next(check for check in report.checks if check.name == "hh1:ratio_within_bound")
    assert float(ratio.lhs) <= float(ratio.rhs)
    assert "<=" in ratio.relation


def test_validation_rejects_bad_chains_before_compute(tmp_path):
    with pytest.raises(ConfigError, match="does not divide"):
        RunConfig.from_mapping(minimal_payload(tmp_path, stages=[{"k": 1, "l": 4}])).validate()
    with pytest.raises(ConfigError, match="unknown"):
        RunConfig.from_mapping(minimal_payload(tmp_path, colour="blue"))
    with pytest.raises(ConfigError):
        RunConfig.from_mapping(minimal_payload(tmp_path, stages="two"))
    with pytest.raises(ConfigError, match="gcd"):
        RunConfig.from_mapping(minimal_payload(tmp_path, p1=3, q1=6)).validate()
    with pytest.raises(ConfigError, match="planar"):
        RunConfig.from_mapping(minimal_payload(tmp_path, mode="analytic")).validate()
    with pytest.raises(ConfigError, match="k_search"):
        RunConfig.from_mapping(minimal_payload(tmp_path, k_search=True)).validate()


def test_same_config_gives_identical_artifacts(tmp_path):
    first, second = tmp_path / "a", tmp_path / "b"
    run(RunConfig.from_mapping(minimal_payload(first)))
    run(RunConfig.from_mapping(minimal_payload(second)))
    names = sorted(path.name for path in first.iterdir())
    assert "report.json" in names and "towers.svg" in names and "checks.csv" in names
    assert names == sorted(path.name for path in second.iterdir())
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_report_reloads_for_rendering(tmp_path):
    report = run(RunConfig.from_mapping(minimal_payload(tmp_path)))
    loaded = RunReport.read(tmp_path / "report.json")
    assert loaded.to_json() == report.to_json()
    rendered = render_figures(loaded, tmp_path / "again")
    assert {path.name for path in rendered} == {"towers.svg", "h_pattern.svg", "speed.svg"}


def test_empty_report_renders_nothing(tmp_path):
    report = run(RunConfig.from_mapping(minimal_payload(tmp_path, exact_stages=0)), write=False)
    assert report.is_empty
    assert render_figures(report, tmp_path / "figures") == []
    assert not (tmp_path / "figures").exists()


def test_literal_tower_schematic_places_caption_offsets(tmp_path):
    stage = StageParams(n=1, p=3, q=5, k=1, l=6)
    assert (stage.m, stage.r) == (3, 4)
    layout = _tower_layout(build_hh1_towers(stage, "literal", check_disjoint=False))
    offset = Fraction(1, 9000)
    lows = {Fraction(lo) for lo, _ in layout[0]["stripes"]}
    assert lows == {offset, Fraction(23, 50) + offset, Fraction(32, 50) + offset, Fraction(41, 50) + offset}
    path = plot_tower_schematic(layout, tmp_path / "figure_t.svg")
    assert path.read_text(encoding="utf-8").lstrip().startswith("<?xml")


def test_h_pattern_figure_is_deterministic(tmp_path):
    first = plot_h_pattern(6, 1, 3, 0, tmp_path / "one.svg").read_bytes()
    second = plot_h_pattern(6, 1, 3, 0, tmp_path / "two.svg").read_bytes()
    assert first == second


def test_presets_all_validate():
    names = PresetManager.list_presets(PRESETS)
    assert {"minimal", "towers", "figure_h", "figure_t", "chain3", "analytic"} <= set(names)
    for name in names:
        schedule = PresetManager.load(name, PRESETS).validate()
        assert len(schedule) >= 1, name
    chain = PresetManager.load("chain3", PRESETS)
    assert len(chain.with_overrides(stage_count=2).validate()) == 2
    with pytest.raises(ConfigError, match="unknown preset"):
        PresetManager.get_preset("baseline", PRESETS)


def test_cli_exit_codes(tmp_path, capsys):
    minimal = str(PRESETS / "minimal.toml")
    assert main(["params", "--config", minimal]) == EXIT_OK
    assert "return identities: ok" in capsys.readouterr().out
    assert main(["verify", "--config", minimal, "--out", str(tmp_path)]) == EXIT_OK
    assert not any(tmp_path.iterdir())

    bad = tmp_path / "bad.toml"
    bad.write_text('p1 = 1\nq1 = 3\n[[stages]]\nk = 1\nl = 4\n', encoding="utf-8")
    assert main(["verify", "--config", str(bad)]) == EXIT_CONFIG
    assert main(["render", "--config", minimal, "--out", str(tmp_path / "missing")]) == EXIT_CONFIG


def test_run_file_overrides_module_defaults(tmp_path):
    run_file = tmp_path / "seed.toml"
    run_file.write_text("p1 = 2\nq1 = 5\nsamples = 64\n", encoding="utf-8")
    try:
        config.apply_defaults(run_file)
        assert (config.SEED_P, config.SEED_Q, config.SAMPLES) == (2, 5, 64)
        assert config.RUN_CONFIG_SOURCE == {"path": str(run_file)}

        run_file.write_text("p1 = [", encoding="utf-8")
        config.apply_defaults(run_file)
        assert config.SEED_Q == 2
        assert config.RUN_CONFIG_SOURCE["error"] == "failed_to_load"
    finally:
        config.apply_defaults(None)
    assert config.RUN_CONFIG_SOURCE is None


def test_exceptional_set_reported_next_to_coverage(tmp_path):
    report = run(RunConfig.from_mapping(minimal_payload(tmp_path)))
    assert [row["kind"] for row in report.exceptional] == [row["kind"] for row in report.coverage]
    hh1 = next(row for row in report.exceptional if row["kind"] == "hh1")
    # delta = 1/3 and the x1 blocks have width 1/(2 * 6^2 * 9)
    assert hh1["measure"] == "8/9"
    assert hh1["widths"] == ["1/972", "1/18"]
    assert hh1["passed"]
    coverage = next(row for row in report.coverage if row["kind"] == "hh1")
    assert coverage["level_mass"] == coverage["level_bound"]
    assert (tmp_path / "exceptional.csv").exists()


def test_analytic_run_checks_convergence_and_l(tmp_path):
    payload = minimal_payload(tmp_path, mode="both", planar="g", samples=200)
    stage = RunConfig.from_mapping(payload).validate().stages[0]
    report = run(RunConfig.from_mapping(payload))
    by_name = {check.name: check for check in report.checks}

    gap = by_name["d_rho_within_budget"]
    assert gap.stage == 1
    assert float(gap.rhs) == float(stage.convergence_budget)
    assert gap.passed == (float(gap.lhs) < float(gap.rhs))

    # H_0 is the identity, so the witness is exactly 1 and the bound is d * n^2
    l_check = by_name["l_exceeds_d_n2_DH_inverse"]
    assert (l_check.lhs, l_check.rhs, l_check.passed) == ("6", "2.0", True)
    assert report.schedule["l_bound_witness"] == ["1.0"]

    (diagnostics,) = report.analytic
    assert [point["rho"] for point in diagnostics["strip_norm"]][0] == 0.0
    assert len(diagnostics["strip_norm"]) == config.STRIP_WIDTHS
    assert len(diagnostics["sampling"]) == config.SAMPLING_ROWS
    assert diagnostics["dh_inverse"]["sup"] == 1.0
    for name in ("strip_norm.csv", "sampling.csv", "exceptional.csv"):
        assert (tmp_path / name).exists(), name

    assert report.notes and "slide model" in report.notes[0]
    assert RunReport.read(tmp_path / "report.json").notes == report.notes


def test_k_search_reports_doubling_certificates(tmp_path):
    payload = minimal_payload(tmp_path, mode="analytic", planar="g", samples=100, k_search=True)
    report = run(RunConfig.from_mapping(payload), write=False)
    search = report.analytic[0]["k_search"]
    tried = [item["k"] for item in search["certificates"]]
    assert tried[0] == 2
    assert all(b == 2 * a for a, b in zip(tried, tried[1:]))
    check = next(check for check in report.checks if check.name == "k_search_meets_budget")
    assert check.passed == search["passed"]
