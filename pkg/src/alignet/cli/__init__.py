from __future__ import annotations

from pathlib import Path

import typer

from ..clustering import read_clusters
from ..errors import MissingArtifactError
from ..logging import setup_logging
from ..pipeline import ALL_STAGES, CLUSTERS
from ..report import sample_for_annotation, write_annotation_sample
from .init import run_init
from .run import (
    CONFIG_OPTION,
    EXIT_INTERNAL,
    EXIT_MISSING_ARTIFACT,
    EXIT_VALIDATION,
    SEED_OPTION,
    app_main,
    build_context,
    cli_errors,
    exit_code_for,
    make_stage_cmd,
    pipeline_cmd,
)

__all__ = [
    "EXIT_INTERNAL",
    "EXIT_MISSING_ARTIFACT",
    "EXIT_VALIDATION",
    "create_app",
    "exit_code_for",
    "main",
]


def init(
    path: Path | None = typer.Argument(None, help="Where to write the config file."),
    force: bool = typer.Option(False, "--force", help="Overwrite an existing file."),
) -> None:
    """Write a default config file."""
    with cli_errors():
        cfg_path = run_init(path, force=force)
    typer.echo(f"wrote {cfg_path}")


def sample(
    config: Path | None = CONFIG_OPTION,
    seed: int | None = SEED_OPTION,
    out: Path | None = typer.Option(None, "--out", help="Override the output directory."),
    fraction: float | None = typer.Option(
        None, "--fraction", min=0.0, max=1.0, help="Share of each cluster to draw."
    ),
    output: Path | None = typer.Option(
        None, "--output", "-o", help="CSV to write (default: <out>/report/annotation_sample.csv)."
    ),
) -> None:
    """Draw a seeded stratified sample of clustered users for manual annotation."""
    setup_logging(debug=False)
    with cli_errors():
        ctx = build_context(config, seed, None, out)
        clusters_path = ctx.path(CLUSTERS)
        if not clusters_path.is_file():
            raise MissingArtifactError(clusters_path, stage="sample")
        drawn = sample_for_annotation(
            read_clusters(clusters_path),
            fraction if fraction is not None else ctx.settings.report.annotation_fraction,
            ctx.seed,
        )
        target = output or ctx.path("report/annotation_sample.csv")
        write_annotation_sample(drawn, target)
    typer.echo(f"wrote {len(drawn)} users to {target}")


def create_app() -> typer.Typer:
    app = typer.Typer(
        add_completion=False,
        no_args_is_help=True,
        help="Sentiment alignment of users in social graphs.",
    )
    app.callback()(app_main)
    for stage in ALL_STAGES:
        app.command(name=stage, help=f"Run the `{stage}` stage.")(make_stage_cmd(stage))
    app.command(name="pipeline")(pipeline_cmd)
    app.command(name="init")(init)
    app.command(name="sample")(sample)
    return app


def main() -> None:
    app = create_app()
    app()


if __name__ == "__main__":
    main()
