"""Msgspec models and decoder for message JSON Lines records."""

from __future__ import annotations

import msgspec


class MessageRecord(msgspec.Struct, forbid_unknown_fields=False, omit_defaults=True):
    id: str
    author: str
    ts: int
    text: str
    reply_to: str | None = None
    retweet_of: str | None = None
    hashtags: list[str] | None = None
    mentions: list[str] | None = None


class CanonicalRecord(msgspec.Struct, kw_only=True):
    """Serialized form of an ingested message; field order is the file's column order."""

    id: str
    author: str
    ts: int
    text: str
    kind: str
    reply_to: str | None = None
    retweet_of: str | None = None
    hashtags: list[str]
    mentions: list[str]


_DECODER = msgspec.json.Decoder(MessageRecord)
_ENCODER = msgspec.json.Encoder()


def decode_record(line: bytes | str) -> MessageRecord:
    return _DECODER.decode(line)


def encode_record(record: CanonicalRecord) -> bytes:
    return _ENCODER.encode(record)
