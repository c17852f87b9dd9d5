"""
SVG figures for run reports.

Output is byte-reproducible: the SVG id salt is fixed and the date metadata dropped.
"""

from __future__ import annotations

import logging
from fractions import Fraction
from pathlib import Path

import matplotlib

matplotlib.use("Agg")  # headless
import matplotlib.pyplot as plt
import numpy as np

from combinatorics.hmap import h_pattern_frame

LOGGER = logging.getLogger(__name__)

SVG_SALT = "abc-lab"
LEVELS_DRAWN = 4
COLORS = {"hTower": "#0B6E99", "hPlusOneTower": "#D1495B", "cyclic": "#66A182"}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": SVG_SALT}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    LOGGER.info("Wrote %s", path)
    return path


def plot_tower_schematic(towers: list[dict], path: Path) -> Path:
    """Base stripes of every tower on the x_1 circle, with the first levels above them."""
    fig, ax = plt.subplots(figsize=(9, 1.2 + 0.9 * len(towers)))
    labels = []
    for row, tower in enumerate(towers):
        step = Fraction(tower["step"])
        color = COLORS.get(tower["label"], "#555555")
        for level in range(min(LEVELS_DRAWN, tower["height"])):
            spans = []
            for lo, hi in tower["stripes"]:
                start = (Fraction(lo) + level * step) % 1
                width = Fraction(hi) - Fraction(lo)
                spans.append((float(start), float(width)))
            ax.broken_barh(spans, (row + 0.1 + 0.2 * level, 0.18), facecolors=color, alpha=1.0 - 0.2 * level)
        labels.append(f"n={tower['n']} {tower['label']} (h={tower['height']})")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, len(towers))
    ax.set_yticks(np.arange(len(towers)) + 0.5)
    ax.set_yticklabels(labels)
    ax.set_xlabel("x_1 (conjugated coordinates)")
    ax.set_title("Tower bases and first levels")
    fig.tight_layout()
    return _save(fig, path)


def plot_h_pattern(l: int, p: int, q: int, r: int, path: Path) -> Path:
    """Colour of each source block is the x_1 cell of its image under h."""
    frame = h_pattern_frame(l, p, q, r)
    n1, n2 = int(frame["n1"].iloc[0]), int(frame["n2"].iloc[0])
    image = frame["image_x1_cell"].to_numpy().reshape(n1, n2).T
    fig, ax = plt.subplots(figsize=(9, 3))
    ax.imshow(image, origin="lower", aspect="auto", interpolation="nearest", cmap="viridis", extent=(0, 1, 0, 1))
    ax.set_xlabel("x_1")
    ax.set_ylabel("x_2")
    ax.set_title(f"h for l={l}, p={p}, q={q}, r={r}")
    fig.tight_layout()
    return _save(fig, path)


def plot_speed_curve(speed: list[dict], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for kind in sorted({row["kind"] for row in speed}):
        rows = [row for row in speed if row["kind"] == kind]
        n = [row["n"] for row in rows]
        ax.plot(n, [row["ratio"] for row in rows], marker="o", lw=1.5, label=f"{kind} ratio")
        ax.plot(n, [row["ratio_bound"] for row in rows], ls="--", lw=1.0, label=f"{kind} bound")
    ax.set_xlabel("stage n")
    ax.set_ylabel("h * one-sided defect")
    ax.set_title("Speed of approximation")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def plot_spectral_density(spectral: list[dict], path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    for summary in spectral:
        density = summary["density"]
        ax.plot(density["theta"], density["values"], lw=1.2, label=f"n={summary['n']} {density['label']}")
    ax.set_xlabel("theta")
    ax.set_ylabel("Fejer density")
    ax.set_title("Spectral density estimate")
    ax.grid(True, alpha=0.3)
    ax.legend()
    fig.tight_layout()
    return _save(fig, path)


def render_figures(report, out_dir: Path) -> list[Path]:
    """Every figure the report has data for; an empty report writes nothing."""
    if report.is_empty:
        LOGGER.info("Report %s is empty; no figures rendered", report.name)
        return []
    out_dir = Path(out_dir)
    written = []
    towers = report.layouts.get("towers", [])
    if towers:
        written.append(plot_tower_schematic(towers, out_dir / "towers.svg"))
    pattern = report.layouts.get("h_pattern")
    if pattern:
        written.append(plot_h_pattern(pattern["l"], pattern["p"], pattern["q"], pattern["r"], out_dir / "h_pattern.svg"))
    if report.speed:
        written.append(plot_speed_curve(report.speed, out_dir / "speed.svg"))
    if report.spectral:
        written.append(plot_spectral_density(report.spectral, out_dir / "spectral_density.svg"))
    return written
