"""
CSV tables derived from a run report.
"""

from __future__ import annotations

import logging
from pathlib import Path

import pandas as pd

LOGGER = logging.getLogger(__name__)


def checks_frame(report) -> pd.DataFrame:
    return pd.DataFrame(
        [check.to_dict() for check in report.checks],
        columns=["stage", "name", "relation", "lhs", "rhs", "passed"],
    )


def schedule_frame(report) -> pd.DataFrame:
    return pd.DataFrame(report.schedule.get("stages", []))


def speed_table(report) -> pd.DataFrame:
    columns = ["n", "kind", "height", "weak_distance", "one_sided", "one_sided_bound", "symmetric_bound", "tail_bound", "ratio", "ratio_bound", "passed"]
    return pd.DataFrame([{key: row[key] for key in columns} for row in report.speed], columns=columns)


def coverage_table(report) -> pd.DataFrame:
    columns = ["n", "kind", "contained_levels", "level_mass", "level_bound", "covered", "coverage_target", "passed"]
    return pd.DataFrame([{key: row[key] for key in columns} for row in report.coverage], columns=columns)


def exceptional_table(report) -> pd.DataFrame:
    columns = ["n", "kind", "measure", "sampled_measure", "tolerance", "process_mass", "levels_meeting", "levels", "passed"]
    rows = []
    for row in report.exceptional:
        flat = {key: row[key] for key in columns}
        flat.update({f"width_x{axis + 1}": width for axis, width in enumerate(row["widths"])})
        rows.append(flat)
    return pd.DataFrame(rows)


def strip_norm_table(report) -> pd.DataFrame:
    rows = [
        {"n": item["n"], "rho": point["rho"], "norm": point["norm"]}
        for item in report.analytic
        for point in item["strip_norm"]
    ]
    return pd.DataFrame(rows, columns=["n", "rho", "norm"])


def sampling_table(report) -> pd.DataFrame:
    """Sampled points of each analytic h_n: distance to the slide model and where the point lies."""
    rows = []
    for item in report.analytic:
        for point in item["sampling"]:
            row = {"n": item["n"]}
            row.update({f"x{axis + 1}": value for axis, value in enumerate(point["x"])})
            row.update(error=point["error"], near_jump=point["near_jump"], good_domain=point["good_domain"])
            rows.append(row)
    return pd.DataFrame(rows)


def tower_table(report) -> pd.DataFrame:
    rows = [
        {
            "n": tower["n"],
            "kind": tower["kind"],
            "label": tower["label"],
            "height": tower["height"],
            "step": tower["step"],
            "x1_lo": lo,
            "x1_hi": hi,
        }
        for tower in report.layouts.get("towers", [])
        for lo, hi in tower["stripes"]
    ]
    return pd.DataFrame(rows, columns=["n", "kind", "label", "height", "step", "x1_lo", "x1_hi"])


def spectral_table(report) -> pd.DataFrame:
    """One row per stage and weak-limit observable set, with kappa and spectral mass."""
    rows = []
    for summary in report.spectral:
        kappa = summary.get("kappa") or {}
        for subset, fit in (summary.get("weak_limit") or {}).items():
            rows.append(
                {
                    "n": summary["n"],
                    "subset": subset,
                    "r": fit["r"],
                    "residual": fit["residual"],
                    "r2": fit["r2"],
                    "pairs": fit["pairs"],
                    "kappa": kappa.get("kappa"),
                    "mass": summary["density"]["mass"],
                }
            )
    return pd.DataFrame(rows, columns=["n", "subset", "r", "residual", "r2", "pairs", "kappa", "mass"])


def density_table(report) -> pd.DataFrame:
    frames = [
        pd.DataFrame(
            {
                "n": summary["n"],
                "theta": summary["density"]["theta"],
                "density": summary["density"]["values"],
            }
        )
        for summary in report.spectral
    ]
    if not frames:
        return pd.DataFrame(columns=["n", "theta", "density"])
    return pd.concat(frames, ignore_index=True)


TABLES = {
    "checks": checks_frame,
    "schedule": schedule_frame,
    "speed": speed_table,
    "coverage": coverage_table,
    "exceptional": exceptional_table,
    "towers": tower_table,
    "spectral": spectral_table,
    "density": density_table,
    "strip_norm": strip_norm_table,
    "sampling": sampling_table,
}


def write_tables(report, out_dir: Path) -> list[Path]:
    """Write every non-empty table as ``<name>.csv``."""
    written = []
    for name, build in TABLES.items():
        frame = build(report)
        if frame.empty:
            continue
        path = Path(out_dir) / f"{name}.csv"
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)
        written.append(path)
    LOGGER.debug("Wrote %d tables to %s", len(written), out_dir)
    return written
