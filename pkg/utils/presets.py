"""
Named desk-scale run configurations
"""

from __future__ import annotations

from pathlib import Path

import config
from errors import ConfigError
from reports.run_config import RunConfig


class PresetManager:
    """
    Looks up the TOML run files under ``config/presets``
    Makes it easy to rerun the standard desk-scale checks by name
    """

    @staticmethod
    def list_presets(directory: str | Path = config.PRESET_DIR) -> list[str]:
        """Return the available preset names"""
        return [path.stem for path in config.list_preset_files(directory)]

    @staticmethod
    def get_preset(name: str, directory: str | Path = config.PRESET_DIR) -> dict[str, object]:
        """
        Get the raw configuration of a named preset

        Returns:
            Dictionary with the TOML keys of the run file
        """
        path = Path(directory) / f"{name}.toml"
        if not path.is_file():
            available = ", ".join(PresetManager.list_presets(directory)) or "none"
            raise ConfigError(f"unknown preset {name!r}; available: {available}")
        payload = config.load_run_file(path)
        payload.setdefault("name", name)
        return payload

    @staticmethod
    def load(name_or_path: str | Path, directory: str | Path = config.PRESET_DIR) -> RunConfig:
        """
        Resolve a preset name or a path to a TOML file into a RunConfig

        Args:
            name_or_path: preset name such as ``"minimal"`` or a path ending in ``.toml``
        """
        if str(name_or_path).endswith(".toml"):
            return RunConfig.from_file(name_or_path)
        return RunConfig.from_mapping(PresetManager.get_preset(str(name_or_path), directory))
