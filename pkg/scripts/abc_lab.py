"""
CLI for building, verifying and rendering AbC stage chains.

Exit codes: 0 when every check passes, 1 when any check fails, 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Sequence

import config
from errors import BudgetError, ConfigError, ParameterError
from reports.figures import render_figures
from reports.runner import RunReport, run, write_outputs
from simulation.abc_model import MODES
from utils.presets import PresetManager

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2


def parse_args(argv: Sequence[str] | None = None) -> argparse.Namespace:
    parser = argparse.ArgumentParser(description="Approximation-by-conjugation laboratory")
    parser.add_argument("verb", choices=["run", "verify", "render", "params"])
    parser.add_argument(
        "--config",
        default=config.RUN_CONFIG_FILE,
        help="Preset name (e.g. minimal) or path to a TOML run file",
    )
    parser.add_argument("--stages", type=int, help="Number of stages to build")
    parser.add_argument("--mode", choices=MODES, help="Realization of the stage maps")
    parser.add_argument("--out", type=Path, help="Output directory for reports, tables and figures")
    parser.add_argument("--seed", type=int, help="Seed for sampled checks")
    parser.add_argument("--verbose", action="store_true", help="Log at DEBUG level")
    return parser.parse_args(argv)


def print_verdicts(report: RunReport) -> None:
    print(f"{report.name}: {len(report.checks)} checks, {len(report.failed)} failed")
    for note in report.notes:
        print(f"  NOTE {note}")
    for check in report.failed:
        print(f"  FAIL stage {check.stage} {check.name:<48} {check.lhs} vs {check.rhs}  ({check.relation})")


def print_params(run_config) -> None:
    schedule = run_config.validate()
    print(schedule.frame()[["n", "p", "q", "k", "l", "p_next", "q_next", "leven"]].to_string(index=False))
    for identity in schedule.identity_reports():
        verdict = "ok" if identity.passed else "FAIL"
        print(f"stage {identity.n} return identities: {verdict}")


def main(argv: Sequence[str] | None = None) -> int:
    args = parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else config.LOG_LEVEL,
        format="[%(levelname)s] %(name)s: %(message)s",
    )
    try:
        run_config = PresetManager.load(args.config).with_overrides(
            stage_count=args.stages, mode=args.mode, output_dir=args.out, seed=args.seed
        )
        if args.verb == "params":
            print_params(run_config)
            return EXIT_OK
        if args.verb == "render":
            report = RunReport.read(run_config.output_dir / "report.json")
            for path in render_figures(report, run_config.output_dir):
                print(f"Figure saved to {path}")
            return EXIT_OK
        report = run(run_config, write=False)
    except (ConfigError, BudgetError, ParameterError, FileNotFoundError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    if args.verb == "run":
        for path in write_outputs(report, run_config.output_dir, run_config.figures):
            print(f"Saved {path}")
    print_verdicts(report)
    return EXIT_OK if report.passed else EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
