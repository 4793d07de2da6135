from __future__ import annotations

from pathlib import Path

import typer

from ..config import DEFAULT_CONFIG_NAME, default_config, write_config
from ..settings import validate_settings_data


def run_init(path: Path | None, *, force: bool) -> Path:
    cfg_path = path or Path.cwd() / DEFAULT_CONFIG_NAME
    if cfg_path.is_dir():
        cfg_path = cfg_path / DEFAULT_CONFIG_NAME
    if cfg_path.exists() and not force:
        typer.echo(f"error: {cfg_path} already exists (use --force to overwrite)", err=True)
        raise typer.Exit(code=1)
    config = default_config()
    validate_settings_data(config, config_path=cfg_path)
    write_config(config, cfg_path)
    return cfg_path
