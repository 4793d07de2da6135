"""Corpus and follower-list ingestion into the canonical data model."""

from __future__ import annotations

import re
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path
from typing import Literal

import msgspec
import pandas as pd

from .errors import CorruptInputError, InputError, ValidationError
from .logging import get_logger
from .model import Corpus, FollowerEdgeList, Message, MessageKind
from .schemas.records import CanonicalRecord, MessageRecord, decode_record, encode_record
from .utils.files import atomic_write_bytes
from .utils.parallel import ordered_map

logger = get_logger(__name__)

MENTION_RE = re.compile(r"^@([A-Za-z0-9_]{1,15})(?![A-Za-z0-9_])")
HASHTAG_RE = re.compile(r"^#(\w+)")

REJECT_THRESHOLD = 0.5
_CHUNK_LINES = 4096


@dataclass(frozen=True, slots=True)
class RejectedLine:
    line: int
    reason: str


@dataclass(frozen=True, slots=True)
class RejectsReport:
    path: Path
    total: int
    rejected: tuple[RejectedLine, ...] = field(default=())

    @property
    def accepted(self) -> int:
        return self.total - len(self.rejected)

    def to_dict(self) -> dict[str, object]:
        return {
            "path": self.path.name,
            "total": self.total,
            "accepted": self.accepted,
            "rejected": [{"line": r.line, "reason": r.reason} for r in self.rejected],
        }


@dataclass(frozen=True, slots=True)
class IngestResult:
    corpus: Corpus
    rejects: RejectsReport


def _unique(values: Iterable[str]) -> list[str]:
    seen: set[str] = set()
    out: list[str] = []
    for value in values:
        if value and value not in seen:
            seen.add(value)
            out.append(value)
    return out


def extract_mentions(text: str) -> list[str]:
    """Lowercased handles of tokens starting with '@', in order of first occurrence."""
    found: list[str] = []
    for token in text.split():
        match = MENTION_RE.match(token)
        if match:
            found.append(match.group(1).lower())
    return _unique(found)


def extract_hashtags(text: str) -> list[str]:
    found: list[str] = []
    for token in text.split():
        match = HASHTAG_RE.match(token)
        if match:
            found.append(match.group(1).lower())
    return _unique(found)


def normalize_tag(value: str) -> str:
    return value.strip().lstrip("#").lower()


def _handle(value: str | None) -> str | None:
    return (value.strip().lstrip("@").lower() or None) if value else None


def classify_kind(record: MessageRecord) -> MessageKind:
    if _handle(record.retweet_of):
        if _handle(record.reply_to):
            logger.warning(
                "ingest.kind.ambiguous",
                id=record.id,
                reply_to=record.reply_to,
                retweet_of=record.retweet_of,
            )
        return "retweet"
    if _handle(record.reply_to):
        return "reply"
    return "original"


def message_from_record(record: MessageRecord, *, prefer_entities: bool = True) -> Message:
    if not record.id.strip():
        raise ValidationError("empty `id`")
    author = record.author.strip().lower()
    if not author:
        raise ValidationError("empty `author`")
    kind = classify_kind(record)
    reply_to = _handle(record.reply_to)
    retweet_of = _handle(record.retweet_of) if kind == "retweet" else None

    if prefer_entities and record.mentions is not None:
        mentions = _unique(h for h in map(_handle, record.mentions) if h)
    else:
        mentions = extract_mentions(record.text)
    # reply and retweet targets are mentions even when the text omits them
    target = retweet_of if kind == "retweet" else reply_to if kind == "reply" else None
    if target and target not in mentions:
        mentions.insert(0, target)

    if record.hashtags is not None:
        hashtags = _unique(t for t in map(normalize_tag, record.hashtags) if t)
    else:
        hashtags = extract_hashtags(record.text)

    return Message(
        id=record.id,
        author=author,
        timestamp=record.ts,
        text=record.text,
        kind=kind,
        mentions=tuple(mentions),
        hashtags=tuple(hashtags),
        reply_to=reply_to,
        retweet_of=retweet_of,
    )


def _decode_chunk(
    chunk: list[tuple[int, bytes]], prefer_entities: bool
) -> list[tuple[int, Message | None, str | None]]:
    out: list[tuple[int, Message | None, str | None]] = []
    for line_no, raw in chunk:
        try:
            record = decode_record(raw)
            message = message_from_record(record, prefer_entities=prefer_entities)
            out.append((line_no, message, None))
        except (msgspec.ValidationError, msgspec.DecodeError, ValidationError) as exc:
            out.append((line_no, None, str(exc)))
    return out


def load_corpus(
    path: Path,
    schema: Literal["jsonl"] = "jsonl",
    *,
    prefer_entities: bool = True,
    threads: int = 1,
) -> IngestResult:
    if schema != "jsonl":
        raise InputError(f"Unsupported corpus schema {schema!r}.")
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise OSError(f"Failed to read corpus {path}: {exc}") from exc

    lines = [
        (index, line)
        for index, line in enumerate(raw.splitlines(), start=1)
        if line.strip()
    ]
    chunks = [lines[i : i + _CHUNK_LINES] for i in range(0, len(lines), _CHUNK_LINES)]
    decoded = ordered_map(
        lambda chunk: _decode_chunk(chunk, prefer_entities), chunks, threads=threads
    )

    messages: list[Message] = []
    rejected: list[RejectedLine] = []
    seen_ids: set[str] = set()
    for part in decoded:
        for line_no, message, reason in part:
            if message is None:
                rejected.append(RejectedLine(line=line_no, reason=reason or "invalid record"))
            elif message.id in seen_ids:
                rejected.append(RejectedLine(line=line_no, reason=f"duplicate id {message.id!r}"))
            else:
                seen_ids.add(message.id)
                messages.append(message)

    report = RejectsReport(path=path, total=len(lines), rejected=tuple(rejected))
    if lines and len(rejected) / len(lines) > REJECT_THRESHOLD:
        raise CorruptInputError(path=path, total=len(lines), rejected=len(rejected))
    if rejected:
        logger.warning(
            "ingest.rejected",
            path=str(path),
            rejected=len(rejected),
            total=len(lines),
        )
    corpus = Corpus.from_messages(messages)
    logger.info("ingest.loaded", path=str(path), messages=len(corpus), users=len(corpus.users))
    return IngestResult(corpus=corpus, rejects=report)


def parse_corpus(
    path: Path,
    schema: Literal["jsonl"] = "jsonl",
    *,
    prefer_entities: bool = True,
    threads: int = 1,
) -> Corpus:
    return load_corpus(path, schema, prefer_entities=prefer_entities, threads=threads).corpus


def serialize_corpus(corpus: Corpus) -> bytes:
    lines = [
        encode_record(
            CanonicalRecord(
                id=m.id,
                author=m.author,
                ts=m.timestamp,
                text=m.text,
                kind=m.kind,
                reply_to=m.reply_to,
                retweet_of=m.retweet_of,
                hashtags=list(m.hashtags),
                mentions=list(m.mentions),
            )
        )
        for m in corpus.messages
    ]
    return b"".join(line + b"\n" for line in lines)


def write_corpus(corpus: Corpus, path: Path) -> None:
    atomic_write_bytes(path, serialize_corpus(corpus))


def parse_followers(path: Path) -> FollowerEdgeList:
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    except OSError as exc:
        raise OSError(f"Failed to read follower list {path}: {exc}") from exc
    except pd.errors.EmptyDataError:
        return FollowerEdgeList(edges=())
    missing = {"follower", "followee"} - set(frame.columns)
    if missing:
        raise ValidationError(
            f"{path}: missing column(s) {sorted(missing)}; expected follower,followee."
        )
    edges = FollowerEdgeList.from_pairs(zip(frame["follower"], frame["followee"], strict=True))
    logger.info("ingest.followers.loaded", path=str(path), edges=len(edges.edges))
    return edges


def write_followers(edges: FollowerEdgeList, path: Path) -> None:
    frame = pd.DataFrame(list(edges.edges), columns=["follower", "followee"])
    path.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(path, index=False, lineterminator="\n")


def filter_window(corpus: Corpus, t0: int, t1: int) -> Corpus:
    if t0 > t1:
        raise InputError(f"Invalid window: start {t0} is after end {t1}.")
    return Corpus.from_messages(m for m in corpus.messages if t0 <= m.timestamp < t1)


def filter_hashtags(corpus: Corpus, tags: Iterable[str]) -> Corpus:
    wanted = {normalize_tag(tag) for tag in tags}
    wanted.discard("")
    if not wanted:
        raise InputError("Hashtag filter needs at least one tag.")
    return Corpus.from_messages(m for m in corpus.messages if wanted.intersection(m.hashtags))
