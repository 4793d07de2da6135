from __future__ import annotations

from collections.abc import Callable, Iterator
from contextlib import contextmanager
from pathlib import Path
from typing import Any

import typer
from rich import box
from rich.console import Console
from rich.table import Table

from .. import __version__
from ..errors import AlignetError, MissingArtifactError, ValidationError
from ..logging import get_logger, setup_logging
from ..pipeline import StageContext, StageResult, Stage, run_pipeline, run_stage
from ..settings import load_settings, resolve_paths

logger = get_logger(__name__)

EXIT_INTERNAL = 1
EXIT_MISSING_ARTIFACT = 2
EXIT_VALIDATION = 3

CONFIG_OPTION = typer.Option(
    None, "--config", "-c", help="Config file (default: ./alignet.toml)."
)
SEED_OPTION = typer.Option(None, "--seed", help="Override the configured seed.")
THREADS_OPTION = typer.Option(None, "--threads", min=1, help="Worker threads per stage.")
OUT_OPTION = typer.Option(None, "--out", help="Override the output directory.")
DEBUG_OPTION = typer.Option(False, "--debug/--no-debug", help="Log debug events.")


def _print_version_and_exit() -> None:
    typer.echo(f"alignet {__version__}")
    raise typer.Exit()


def _version_callback(value: bool) -> None:
    if value:
        _print_version_and_exit()


def app_main(
    version: bool = typer.Option(
        False,
        "--version",
        help="Show the version and exit.",
        callback=_version_callback,
        is_eager=True,
    ),
) -> None:
    """Sentiment alignment of users in social graphs."""


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, MissingArtifactError):
        return EXIT_MISSING_ARTIFACT
    if isinstance(exc, ValidationError):
        return EXIT_VALIDATION
    return EXIT_INTERNAL


@contextmanager
def cli_errors() -> Iterator[None]:
    """Print `error: ...` on stderr and exit with the code of the failure class."""
    try:
        yield
    except typer.Exit:
        raise
    except (AlignetError, OSError) as exc:
        typer.echo(f"error: {exc}", err=True)
        raise typer.Exit(code=exit_code_for(exc)) from exc
    except Exception as exc:  # noqa: BLE001
        logger.exception("cli.internal_error", error=str(exc))
        typer.echo(f"error: internal error: {exc}", err=True)
        raise typer.Exit(code=EXIT_INTERNAL) from exc


def build_context(
    config: Path | None, seed: int | None, threads: int | None, out: Path | None
) -> StageContext:
    settings, cfg_path = load_settings(config, seed=seed, threads=threads)
    paths = resolve_paths(settings, base_dir=cfg_path.parent, output_dir=out)
    return StageContext(
        settings=settings, paths=paths, seed=settings.seed, threads=settings.threads
    )


def _format_value(value: Any) -> str:
    if isinstance(value, float):
        return f"{value:.4g}"
    return str(value)


def render_summary(result: StageResult, ctx: StageContext, console: Console) -> None:
    table = Table(
        title=f"stage: {result.stage}", show_header=True, header_style="bold", box=box.SIMPLE
    )
    table.add_column("artifact")
    table.add_column("bytes", justify="right")
    for path in sorted(result.outputs):
        try:
            shown = path.relative_to(ctx.out).as_posix()
        except ValueError:
            shown = str(path)
        table.add_row(shown, str(path.stat().st_size))
    console.print(table)
    if result.summary:
        facts = Table(show_header=False, box=None, pad_edge=False)
        facts.add_column(style="cyan")
        facts.add_column()
        for key, value in result.summary.items():
            facts.add_row(key, _format_value(value))
        console.print(facts)


def make_stage_cmd(stage: Stage) -> Callable[..., None]:
    def _cmd(
        config: Path | None = CONFIG_OPTION,
        seed: int | None = SEED_OPTION,
        threads: int | None = THREADS_OPTION,
        out: Path | None = OUT_OPTION,
        debug: bool = DEBUG_OPTION,
    ) -> None:
        setup_logging(debug=debug)
        console = Console(stderr=True)
        with cli_errors():
            ctx = build_context(config, seed, threads, out)
            result = run_stage(stage, ctx)
            render_summary(result, ctx, console)

    _cmd.__name__ = f"run_{stage}"
    _cmd.__doc__ = f"Run the `{stage}` stage."
    return _cmd


def pipeline_cmd(
    config: Path | None = CONFIG_OPTION,
    seed: int | None = SEED_OPTION,
    threads: int | None = THREADS_OPTION,
    out: Path | None = OUT_OPTION,
    debug: bool = DEBUG_OPTION,
) -> None:
    """Run every analysis stage in order (synth excluded)."""
    setup_logging(debug=debug)
    console = Console(stderr=True)
    with cli_errors():
        ctx = build_context(config, seed, threads, out)
        for result in run_pipeline(ctx):
            render_summary(result, ctx, console)
