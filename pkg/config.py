"""
Configuration parameters for the AbC laboratory
"""

from __future__ import annotations

import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Torus and strip
DEFAULT_DIMENSION = 2
DEFAULT_RHO = 0.05  # Strip half-width for analytic norms

# Stage seed and per-stage defaults
SEED_P = 1
SEED_Q = 2
DEFAULT_K = 1
DEFAULT_L = 4
STRICT_LEVEN = False  # Desk-scale runs only enforce 2q | l
EPSILON_VARIANT = "strictest"  # prescribed | planar | higher | strictest

# Exact engine
CELL_BUDGET = int(os.environ.get("ABC_CELL_BUDGET", 100_000_000))
ORBIT_BOUND = 100_000  # Longest orbit evaluate() will produce
PLANAR_MODEL = "h"  # h: combinatorial map on A-blocks, g: slide model

# Analytic layer
SIGMA_FLOOR = 1e-7  # Smallest mollifier scale treated as representable
TRUNCATION_TAIL = 1e-14  # Heat-kernel series tail on the working strip
FD_STEP = 1e-6  # Central-difference step for derivative cross-checks
FD_RTOL = 1e-6
K_CEILING = 1 << 12  # Doubling search for k_n stops here

# Sampling
SAMPLES = 1_000
RANDOM_SEED = 2024

# Tower and spectral diagnostics
SUBSTANTIAL_FRACTION = 0.25  # h * mu(level) must exceed this times (1 - 2 delta)^(d-1)
WEAK_LIMIT_TOLERANCE = 0.5  # Relative residual accepted from the weak-limit fit
FEJER_MIN_WINDOW = 4
EXHAUSTIVE_LEVELS = 20_000  # Level-by-level sweeps above this many stripes use top levels only
PULLBACK_CELLS = 250_000  # Largest stage grid for pulled-back tower checks
SPECTRAL_ARCS = 1_000_000  # Largest q_{n+1} for Koopman diagnostics
SPECTRAL_LAGS = 64
SPECTRAL_LEVELS = 40  # Merged levels used by the weak-limit and kappa fits
LAYOUT_STRIPES = 64  # Widest tower base drawn in reports
STRIP_WIDTHS = 5  # Strip half-widths in [0, rho] for the analytic norm curve
SAMPLING_ROWS = 64  # Sampled points kept per analytic stage

# Reports
OUTPUT_DIR = Path(os.environ.get("ABC_OUTPUT_DIR", "out"))
LOG_LEVEL = os.environ.get("ABC_LOG_LEVEL", "INFO")
PRESET_DIR = Path("config/presets")

# Run-file override
RUN_CONFIG_FILE = os.environ.get(
    "ABC_CONFIG_FILE",
    "config/presets/minimal.toml",
)
RUN_CONFIG_SOURCE = None

_DEFAULTS = {
    "DEFAULT_DIMENSION": DEFAULT_DIMENSION,
    "DEFAULT_RHO": DEFAULT_RHO,
    "SEED_P": SEED_P,
    "SEED_Q": SEED_Q,
    "CELL_BUDGET": CELL_BUDGET,
    "SAMPLES": SAMPLES,
    "RANDOM_SEED": RANDOM_SEED,
}


def _apply_defaults_payload(payload: dict[str, object], path: Path | None) -> None:
    global DEFAULT_DIMENSION, DEFAULT_RHO, SEED_P, SEED_Q, CELL_BUDGET, SAMPLES, RANDOM_SEED
    global RUN_CONFIG_SOURCE

    DEFAULT_DIMENSION = int(payload.get("d", _DEFAULTS["DEFAULT_DIMENSION"]))
    DEFAULT_RHO = float(payload.get("rho", _DEFAULTS["DEFAULT_RHO"]))
    SEED_P = int(payload.get("p1", _DEFAULTS["SEED_P"]))
    SEED_Q = int(payload.get("q1", _DEFAULTS["SEED_Q"]))
    CELL_BUDGET = int(payload.get("cell_budget", _DEFAULTS["CELL_BUDGET"]))
    SAMPLES = int(payload.get("samples", _DEFAULTS["SAMPLES"]))
    RANDOM_SEED = int(payload.get("seed", _DEFAULTS["RANDOM_SEED"]))

    if payload:
        RUN_CONFIG_SOURCE = {"path": str(path) if path else None}
    elif path:
        RUN_CONFIG_SOURCE = {"error": "failed_to_load", "path": str(path)}
    else:
        RUN_CONFIG_SOURCE = None


def load_run_file(path: str | Path) -> dict[str, object]:
    """Read a TOML run configuration into a plain dict."""
    with Path(path).open("rb") as handle:
        return tomllib.load(handle)


def apply_defaults(run_path: str | Path | None) -> None:
    """Take module defaults from a run file, or reset them if None or unreadable."""
    if run_path is None:
        _apply_defaults_payload({}, None)
        return

    path = Path(run_path)
    if not path.exists():
        _apply_defaults_payload({}, path)
        return

    try:
        payload = load_run_file(path)
    except (OSError, tomllib.TOMLDecodeError, ValueError):
        payload = None
    _apply_defaults_payload(payload or {}, path)


def list_preset_files(directory: str | Path = PRESET_DIR) -> list[Path]:
    """Return available TOML run files sorted alphabetically."""
    dir_path = Path(directory)
    if not dir_path.exists():
        return []
    return sorted(p for p in dir_path.glob("*.toml") if p.is_file())


_run_path = Path(RUN_CONFIG_FILE)
if "ABC_CONFIG_FILE" in os.environ and _run_path.exists():
    apply_defaults(_run_path)
