"""Reading and writing the TOML config file.

Validation lives in `alignet.settings`; this module only deals with the
file itself.
"""

from __future__ import annotations

import tomllib
from pathlib import Path
from typing import Any

import tomli_w

from .errors import ValidationError
from .utils.files import atomic_write_text

DEFAULT_CONFIG_NAME = "alignet.toml"


class ConfigError(ValidationError):
    pass


def read_config(cfg_path: Path) -> dict[str, Any]:
    if cfg_path.exists() and not cfg_path.is_file():
        raise ConfigError(f"Config path {cfg_path} exists but is not a file.") from None
    try:
        raw = cfg_path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"Missing config file {cfg_path}.") from None
    except OSError as e:
        raise ConfigError(f"Failed to read config file {cfg_path}: {e}") from e
    try:
        return tomllib.loads(raw)
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"Malformed TOML in {cfg_path}: {e}") from None


def resolve_path(value: str | Path, *, base_dir: Path) -> Path:
    path = Path(value).expanduser()
    return path if path.is_absolute() else base_dir / path


def write_config(config: dict[str, Any], path: Path) -> None:
    try:
        payload = tomli_w.dumps(config)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"Unsupported config value: {e}") from None
    try:
        atomic_write_text(path, payload)
    except OSError as e:
        raise ConfigError(f"Failed to write config file {path}: {e}") from e


def default_config() -> dict[str, Any]:
    """Starter config written by `alignet init`."""
    return {
        "seed": 0,
        "threads": 1,
        "output_dir": "out",
        "inputs": {
            "corpus": "data/messages.jsonl",
            "followers": "data/followers.csv",
        },
        "window": {"hashtags": []},
        "aggregate": {"graph": "full", "polarity": "s_out", "neighbours": "union"},
        "nulltest": {"iterations": 1000, "band": [0.025, 0.975], "schemes": ["sign"]},
        "communities": {"times": [0.5, 1.0, 2.0], "restarts": 10, "min_size": 21},
        "clustering": {"k_min": 1, "k_max": 8, "restarts": 10},
        "report": {"day_seconds": 86400, "bin_seconds": 900},
    }
