"""structlog setup for alignet.

Log lines always go to standard error so stage artifacts and `--version`
output on standard out stay clean. Configuration comes from the
environment:

* ``ALIGNET_LOG_LEVEL``: debug, info (default), warning, error
* ``ALIGNET_LOG_FORMAT``: console (default) or json
* ``ALIGNET_LOG_COLOR``: force colours on or off for the console renderer
* ``ALIGNET_LOG_FILE``: also append every event as a JSON line to this file
* ``ALIGNET_TRACE_PIPELINE``: log per-step pipeline events at info
"""

from __future__ import annotations

import os
import sys
from collections.abc import Iterator, Mapping
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass
from typing import Any, Literal, TextIO

import numpy as np
import structlog
from structlog.types import EventDict, Processor, WrappedLogger

type LogFormat = Literal["console", "json"]

LEVELS: Mapping[str, int] = {
    "debug": 10,
    "info": 20,
    "warning": 30,
    "error": 40,
    "exception": 40,
    "critical": 50,
}

_ENV_PREFIX = "ALIGNET_"
_TRUE = frozenset({"1", "true", "yes", "on"})

_muted_below: ContextVar[int] = ContextVar("alignet_muted_below", default=0)
_trace_pipeline = False
_tee: TextIO | None = None


def _env(name: str) -> str | None:
    value = os.environ.get(_ENV_PREFIX + name)
    return value.strip() if value is not None else None


@dataclass(frozen=True, slots=True)
class LogSettings:
    level: int = LEVELS["info"]
    format: LogFormat = "console"
    color: bool | None = None
    file: str | None = None
    trace_pipeline: bool = False

    @classmethod
    def from_env(cls, *, debug: bool = False) -> LogSettings:
        level_name = "debug" if debug else (_env("LOG_LEVEL") or "info").lower()
        color = _env("LOG_COLOR")
        return cls(
            level=LEVELS.get(level_name, LEVELS["info"]),
            format="json" if (_env("LOG_FORMAT") or "").lower() == "json" else "console",
            color=None if color is None else color.lower() in _TRUE,
            file=_env("LOG_FILE") or None,
            trace_pipeline=(_env("TRACE_PIPELINE") or "").lower() in _TRUE,
        )


def get_logger(name: str | None = None) -> Any:
    if name:
        return structlog.get_logger(logger_name=name)
    return structlog.get_logger()


def bind_run_context(**fields: Any) -> None:
    structlog.contextvars.bind_contextvars(**fields)


def clear_context() -> None:
    structlog.contextvars.clear_contextvars()


def log_pipeline(logger: Any, event: str, **fields: Any) -> None:
    """Per-step progress event: debug, or info under ALIGNET_TRACE_PIPELINE."""
    if _trace_pipeline:
        logger.info(event, **fields)
    else:
        logger.debug(event, **fields)


@contextmanager
def suppress_logs(level: str = "warning") -> Iterator[None]:
    """Drop events below `level` inside the block (current context only)."""
    token = _muted_below.set(LEVELS.get(level, LEVELS["warning"]))
    try:
        yield
    finally:
        _muted_below.reset(token)


def _drop_muted(_: WrappedLogger, method_name: str, event_dict: EventDict) -> EventDict:
    if LEVELS.get(method_name, 0) < _muted_below.get():
        raise structlog.DropEvent
    return event_dict


def _plain(value: Any) -> Any:
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, Mapping):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def _numpy_to_python(_: WrappedLogger, __: str, event_dict: EventDict) -> EventDict:
    return {key: _plain(value) for key, value in event_dict.items()}


def _logger_name(logger: WrappedLogger, _: str, event_dict: EventDict) -> EventDict:
    name = event_dict.pop("logger_name", None) or getattr(logger, "name", None)
    if name and "logger" not in event_dict:
        event_dict["logger"] = name
    return event_dict


_to_json = structlog.processors.JSONRenderer(default=str)


def _tee_json(logger: WrappedLogger, method_name: str, event_dict: EventDict) -> EventDict:
    if _tee is not None:
        try:
            _tee.write(f"{_to_json(logger, method_name, dict(event_dict))}\n")
            _tee.flush()
        except (OSError, ValueError):
            pass
    return event_dict


class _StderrWriter:
    """Writes to the current sys.stderr; a closed or broken pipe silences it."""

    def __init__(self) -> None:
        self._broken = False

    def write(self, message: str) -> int:
        if self._broken:
            return 0
        try:
            return sys.stderr.write(message)
        except (BrokenPipeError, ValueError):
            self._broken = True
            return 0

    def flush(self) -> None:
        if self._broken:
            return
        try:
            sys.stderr.flush()
        except (BrokenPipeError, ValueError):
            self._broken = True


def _open_tee(path: str | None) -> TextIO | None:
    global _tee
    if _tee is not None:
        _tee.close()
        _tee = None
    if path:
        try:
            _tee = open(path, "a", encoding="utf-8")  # noqa: SIM115
        except OSError:
            _tee = None
    return _tee


def setup_logging(*, debug: bool = False) -> LogSettings:
    global _trace_pipeline

    settings = LogSettings.from_env(debug=debug)
    _trace_pipeline = settings.trace_pipeline
    _open_tee(settings.file)

    if settings.format == "json":
        renderer: Processor = _to_json
    else:
        colors = sys.stderr.isatty() if settings.color is None else settings.color
        renderer = structlog.dev.ConsoleRenderer(colors=colors)

    processors: list[Processor] = [
        _drop_muted,
        structlog.contextvars.merge_contextvars,
        structlog.processors.TimeStamper(fmt="iso", utc=True),
        structlog.processors.add_log_level,
        _logger_name,
        _numpy_to_python,
    ]
    if settings.format == "json":
        processors.append(structlog.processors.format_exc_info)
    processors += [_tee_json, renderer]

    structlog.configure(
        processors=processors,
        wrapper_class=structlog.make_filtering_bound_logger(settings.level),
        logger_factory=structlog.PrintLoggerFactory(file=_StderrWriter()),
        cache_logger_on_first_use=False,
    )
    return settings
