from __future__ import annotations

import hashlib
import os
from pathlib import Path
from typing import Any

import msgspec

_JSON_ENCODER = msgspec.json.Encoder(order="sorted")


def atomic_write_bytes(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_suffix(f"{path.suffix}.tmp")
    with open(tmp_path, "wb") as handle:
        handle.write(payload)
    os.replace(tmp_path, path)


def atomic_write_text(path: Path, text: str) -> None:
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_json(path: Path, payload: Any, *, indent: int = 2) -> None:
    encoded = msgspec.json.format(_JSON_ENCODER.encode(payload), indent=indent)
    atomic_write_bytes(path, encoded + b"\n")


def read_json(path: Path) -> Any:
    return msgspec.json.decode(path.read_bytes())


def sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()
