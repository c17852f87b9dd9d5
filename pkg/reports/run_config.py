"""
Run configuration for the AbC laboratory.

A run file is TOML with the keys below at top level; ``stages`` is either a stage
count or an array of ``{k, l}`` tables:

    d = 2
    p1 = 1
    q1 = 3
    mode = "exact"
    [[stages]]
    k = 2
    l = 6
"""

from __future__ import annotations

import math
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Mapping

import config
from core.params import EPSILON_VARIANTS, ParamSchedule, next_stage, seed_stage
from errors import ConfigError, ParameterError
from simulation.abc_model import MODES, PLANAR_MODELS
from simulation.towers import PLACEMENTS

KEYS = (
    "d",
    "rho",
    "p1",
    "q1",
    "mode",
    "planar",
    "placement",
    "stages",
    "exact_stages",
    "strict_leven",
    "cell_budget",
    "samples",
    "seed",
    "epsilon_variant",
    "tolerance",
    "output_dir",
    "figures",
    "spectral",
    "k_search",
    "name",
    "description",
)


def default_choice(q: int) -> tuple[int, int]:
    """(k, l) used when only a stage count is given: the smallest l >= DEFAULT_L with 2q | l."""
    return config.DEFAULT_K, 2 * q * math.ceil(config.DEFAULT_L / (2 * q))


@dataclass(frozen=True)
class RunConfig:
    name: str = "custom"
    description: str = ""
    d: int = config.DEFAULT_DIMENSION
    rho: float = config.DEFAULT_RHO
    p1: int = config.SEED_P
    q1: int = config.SEED_Q
    mode: str = "exact"
    planar: str = config.PLANAR_MODEL
    placement: str = "aligned"
    stage_count: int = 1
    choices: tuple[tuple[int, int], ...] = field(default=())
    exact_stages: int | None = None
    strict_leven: bool = config.STRICT_LEVEN
    cell_budget: int = config.CELL_BUDGET
    samples: int = config.SAMPLES
    seed: int = config.RANDOM_SEED
    epsilon_variant: str = config.EPSILON_VARIANT
    tolerance: float = config.WEAK_LIMIT_TOLERANCE
    output_dir: Path = config.OUTPUT_DIR
    figures: bool = True
    spectral: bool = True
    k_search: bool = False

    @classmethod
    def from_mapping(cls, payload: Mapping[str, object]) -> "RunConfig":
        unknown = sorted(set(payload) - set(KEYS))
        if unknown:
            raise ConfigError(f"unknown run configuration keys: {', '.join(unknown)}")
        values = {key: payload[key] for key in KEYS if key in payload and key != "stages"}
        stages = payload.get("stages", 1)
        try:
            if isinstance(stages, int) and not isinstance(stages, bool):
                values["stage_count"] = stages
            elif isinstance(stages, list):
                values["choices"] = tuple((int(item["k"]), int(item["l"])) for item in stages)
                values["stage_count"] = len(stages)
            else:
                raise ConfigError(f"stages must be a count or a list of {{k, l}} tables, got {stages!r}")
            for key in ("d", "p1", "q1", "cell_budget", "samples", "seed"):
                if key in values:
                    values[key] = int(values[key])
            for key in ("rho", "tolerance"):
                if key in values:
                    values[key] = float(values[key])
            if values.get("exact_stages") is not None:
                values["exact_stages"] = int(values["exact_stages"])
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"malformed run configuration: {err}") from err
        if "output_dir" in values:
            values["output_dir"] = Path(str(values["output_dir"]))
        return cls(**values)

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        try:
            payload = config.load_run_file(path)
        except FileNotFoundError as err:
            raise ConfigError(f"run configuration {path} does not exist") from err
        except tomllib.TOMLDecodeError as err:
            raise ConfigError(f"run configuration {path} is not valid TOML: {err}") from err
        payload.setdefault("name", Path(path).stem)
        return cls.from_mapping(payload)

    def with_overrides(self, **changes: object) -> "RunConfig":
        """Copy with CLI overrides; ``None`` values are ignored."""
        changes = {key: value for key, value in changes.items() if value is not None}
        if "stage_count" in changes and self.choices:
            changes["choices"] = self.choices[: int(changes["stage_count"])]
        return replace(self, **changes)

    def validate(self) -> ParamSchedule:
        """Check every option and the whole stage chain before any compute."""
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.planar not in PLANAR_MODELS:
            raise ConfigError(f"planar must be one of {PLANAR_MODELS}, got {self.planar!r}")
        if self.placement not in PLACEMENTS:
            raise ConfigError(f"placement must be one of {PLACEMENTS}, got {self.placement!r}")
        if self.epsilon_variant not in EPSILON_VARIANTS:
            raise ConfigError(f"epsilon_variant must be one of {EPSILON_VARIANTS}, got {self.epsilon_variant!r}")
        if self.mode != "exact" and self.planar == "h":
            raise ConfigError(f"mode {self.mode!r} tracks the slide model; set planar = \"g\"")
        if self.k_search and self.mode == "exact":
            raise ConfigError("k_search compares analytic stage maps; set mode to \"analytic\" or \"both\"")
        for key in ("stage_count", "cell_budget", "samples"):
            if getattr(self, key) < 1:
                raise ConfigError(f"{key} must be >= 1, got {getattr(self, key)}")
        if self.rho <= 0:
            raise ConfigError(f"rho must be positive, got {self.rho}")
        if self.exact_stages is not None and self.exact_stages < 0:
            raise ConfigError(f"exact_stages must be >= 0, got {self.exact_stages}")
        try:
            schedule = self.schedule()
        except ParameterError as err:
            raise ConfigError(f"invalid stage chain: {err}") from err
        for stage in schedule.stages:
            if self.planar == "h" and not stage.h_admissible:
                raise ConfigError(
                    f"stage {stage.n}: 2q = {2 * stage.q} does not divide l = {stage.l}"
                )
        return schedule

    def schedule(self) -> ParamSchedule:
        choices = list(self.choices)
        k, l = choices[0] if choices else default_choice(self.q1)
        stages = [
            seed_stage(
                self.p1,
                self.q1,
                k,
                l,
                d=self.d,
                rho=self.rho,
                epsilon_variant=self.epsilon_variant,
                strict=self.strict_leven,
            )
        ]
        for index in range(1, self.stage_count):
            k, l = choices[index] if index < len(choices) else default_choice(stages[-1].q_next)
            stages.append(next_stage(stages[-1], k, l, strict=self.strict_leven))
        return ParamSchedule(stages=tuple(stages))

    def to_dict(self) -> dict[str, object]:
        payload = asdict(self)
        payload["output_dir"] = str(self.output_dir)
        payload["choices"] = [list(choice) for choice in self.choices]
        return payload
