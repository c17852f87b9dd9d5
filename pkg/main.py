"""
Main entry point for the AbC laboratory
"""

import logging
import sys

import config
from reports.runner import run, write_outputs
from scripts.abc_lab import print_verdicts
from utils.presets import PresetManager

# Configure logging
logging.basicConfig(
    level=config.LOG_LEVEL,
    format='[%(levelname)s] %(name)s: %(message)s'
)


def main():
    """Run the default configuration and write its report"""
    run_config = PresetManager.load(config.RUN_CONFIG_FILE)
    print("=" * 60)
    print("AbC Laboratory")
    print("=" * 60)
    print(f"\nRunning {run_config.name} with:")
    print(f"  - dimension d = {run_config.d}")
    print(f"  - seed rotation {run_config.p1}/{run_config.q1}")
    print(f"  - {run_config.stage_count} stage(s), mode {run_config.mode}")
    print(f"  - cell budget {run_config.cell_budget:,}")
    print(f"\nWriting outputs to {run_config.output_dir}")
    print("=" * 60)

    report = run(run_config, write=False)
    write_outputs(report, run_config.output_dir, run_config.figures)
    print_verdicts(report)
    return 0 if report.passed else 1


if __name__ == '__main__':
    sys.exit(main())
