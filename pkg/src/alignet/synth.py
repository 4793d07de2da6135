"""Synthetic corpora with planted groups, for end-to-end checks.

Every message is rendered from a template whose lexicon score is known, so
the planted difference score of each message can be recovered exactly by the
scorer with the bundled test lexicon.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path
from typing import Annotated, Any

import msgspec
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError

from .errors import ValidationError
from .ingest import normalize_tag, write_corpus, write_followers
from .lexicon import Lexicon, load_test_lexicon, score_text
from .logging import get_logger, suppress_logs
from .model import MESSAGE_KINDS, Corpus, FollowerEdgeList, Message, MessageKind, UserId
from .utils.files import read_json
from .utils.rng import derive_rng

logger = get_logger(__name__)

DAY_SECONDS = 86400
POSITIVE_WORDS = {2: "nice", 3: "good", 4: "great", 5: "wonderful"}
NEGATIVE_WORDS = {-2: "poor", -3: "bad", -4: "awful", -5: "horrible"}

_MENTIONS, _FOLLOWS, _ACTIVITY = 0, 1, 2

Probability = Annotated[float, Field(ge=0.0, le=1.0)]
KindMix = tuple[Probability, Probability, Probability]


class SynthConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    groups: list[Annotated[int, Field(gt=0)]] = Field(default_factory=list)
    labels: list[str] | None = None
    mention_rate: list[list[Annotated[float, Field(ge=0.0)]]] = Field(default_factory=list)
    follow_prob: list[list[Probability]] = Field(default_factory=list)
    sentiment_mean: list[list[Annotated[float, Field(ge=-4.0, le=4.0)]]] = Field(
        default_factory=list
    )
    sentiment_noise: Annotated[float, Field(ge=0.0)] = 0.0
    kind_mix: KindMix | list[list[KindMix]] = (0.6, 0.3, 0.1)
    days: Annotated[int, Field(gt=0)] = 1
    start: int = 1_420_070_400
    hashtags: list[str] = Field(default_factory=lambda: ["vote"])
    seed: int = Field(default=0, ge=0)
    activity_exponent: Annotated[float, Field(gt=0.0)] | None = None

    @field_validator("hashtags")
    @classmethod
    def _normalize_hashtags(cls, value: list[str]) -> list[str]:
        tags = [normalize_tag(tag) for tag in value]
        if not all(tags):
            raise ValueError("hashtags must not be empty")
        return list(dict.fromkeys(tags))

    @model_validator(mode="after")
    def _check_shapes(self) -> SynthConfig:
        n = len(self.groups)
        for name in ("mention_rate", "follow_prob", "sentiment_mean"):
            matrix = getattr(self, name)
            if len(matrix) != n or any(len(row) != n for row in matrix):
                raise ValueError(f"{name} must be a {n}x{n} matrix (one row per group)")
        if self.labels is not None and len(self.labels) != n:
            raise ValueError(f"labels must have one entry per group ({n})")
        mixes = [self.kind_mix] if isinstance(self.kind_mix, tuple) else [
            mix for row in self.kind_mix for mix in row
        ]
        if not isinstance(self.kind_mix, tuple) and (
            len(self.kind_mix) != n or any(len(row) != n for row in self.kind_mix)
        ):
            raise ValueError(f"kind_mix must be one triple or a {n}x{n} matrix of triples")
        for mix in mixes:
            if abs(sum(mix) - 1.0) > 1e-9:
                raise ValueError(f"kind_mix probabilities {list(mix)} do not sum to 1")
        return self

    def group_label(self, index: int) -> str:
        return self.labels[index] if self.labels is not None else f"g{index}"

    def mix_for(self, i: int, j: int) -> KindMix:
        if isinstance(self.kind_mix, tuple):
            return self.kind_mix
        return self.kind_mix[i][j]


def parse_synth_config(data: dict[str, Any]) -> SynthConfig:
    try:
        return SynthConfig.model_validate(data)
    except PydanticValidationError as exc:
        raise ValidationError(f"Invalid synthetic config: {exc}") from None


def load_synth_config(path: Path) -> SynthConfig:
    try:
        data = read_json(path)
    except OSError as exc:
        raise ValidationError(f"Failed to read synthetic config {path}: {exc}") from exc
    except msgspec.DecodeError as exc:
        raise ValidationError(f"Malformed JSON in {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ValidationError(f"{path}: expected a JSON object.")
    return parse_synth_config(data)


@dataclass(frozen=True, slots=True)
class SynthResult:
    corpus: Corpus
    followers: FollowerEdgeList
    truth: dict[UserId, str]
    planted: dict[str, int] = field(default_factory=dict)


def template_scores(difference: int) -> tuple[int, int]:
    if difference > 0:
        return 1 + difference, -1
    if difference < 0:
        return 1, difference - 1
    return 1, -1


def render_text(positive: int, negative: int, target: UserId, kind: MessageKind, tag: str) -> str:
    words = ["@" + target]
    if positive > 1:
        words.append(POSITIVE_WORDS[positive])
    words.append("about")
    if negative < -1:
        words.append(NEGATIVE_WORDS[negative])
    words.extend(["the", "vote"])
    if tag:
        words.append("#" + tag)
    text = " ".join(words)
    if kind == "retweet":
        return f"RT @{target}: {text}"
    return text


def _user_ids(config: SynthConfig) -> tuple[list[UserId], list[int]]:
    users: list[UserId] = []
    groups: list[int] = []
    for g, size in enumerate(config.groups):
        for _ in range(size):
            users.append(f"u{len(users):05d}")
            groups.append(g)
    return users, groups


def _activity(config: SynthConfig, n_users: int) -> np.ndarray:
    if config.activity_exponent is None or n_users == 0:
        return np.ones(n_users)
    rng = derive_rng(config.seed, _ACTIVITY)
    weights = rng.pareto(config.activity_exponent, size=n_users) + 1.0
    return weights / weights.mean()


def generate(config: SynthConfig) -> SynthResult:
    users, user_group = _user_ids(config)
    group_index = np.asarray(user_group, dtype=np.int64)
    members = [np.flatnonzero(group_index == g) for g in range(len(config.groups))]
    activity = _activity(config, len(users))
    tag = config.hashtags[0] if config.hashtags else ""
    span = config.days * DAY_SECONDS

    messages: list[Message] = []
    planted: dict[str, int] = {}
    follows: list[tuple[UserId, UserId]] = []
    for gi, sources in enumerate(members):
        for gj, targets in enumerate(members):
            rng = derive_rng(config.seed, _MENTIONS, gi, gj)
            rates = np.outer(activity[sources], np.ones(targets.size)) * config.mention_rate[gi][gj]
            counts = rng.poisson(rates)
            if gi == gj:
                np.fill_diagonal(counts, 0)
            src_idx, dst_idx = np.nonzero(counts)
            repeats = counts[src_idx, dst_idx]
            total = int(repeats.sum())
            kinds = rng.choice(3, size=total, p=np.asarray(config.mix_for(gi, gj), dtype=float))
            noise = rng.standard_normal(total) * config.sentiment_noise
            differences = np.clip(np.rint(config.sentiment_mean[gi][gj] + noise), -4, 4)
            times = config.start + rng.integers(0, span, size=total)
            authors = np.repeat(sources[src_idx], repeats)
            receivers = np.repeat(targets[dst_idx], repeats)
            for author, receiver, kind_index, difference, ts in zip(
                authors, receivers, kinds, differences, times, strict=True
            ):
                message_id = f"m{len(messages):08d}"
                kind: MessageKind = MESSAGE_KINDS[int(kind_index)]
                target = users[int(receiver)]
                positive, negative = template_scores(int(difference))
                messages.append(
                    Message(
                        id=message_id,
                        author=users[int(author)],
                        timestamp=int(ts),
                        text=render_text(positive, negative, target, kind, tag),
                        kind=kind,
                        mentions=(target,),
                        hashtags=tuple(config.hashtags[:1]),
                        reply_to=target if kind == "reply" else None,
                        retweet_of=target if kind == "retweet" else None,
                    )
                )
                planted[message_id] = int(difference)

            follow_rng = derive_rng(config.seed, _FOLLOWS, gi, gj)
            mask = follow_rng.random((sources.size, targets.size)) < config.follow_prob[gi][gj]
            if gi == gj:
                np.fill_diagonal(mask, False)
            for a, b in zip(*np.nonzero(mask), strict=True):
                follows.append((users[int(sources[a])], users[int(targets[b])]))

    truth = {u: config.group_label(g) for u, g in zip(users, user_group, strict=True)}
    result = SynthResult(
        corpus=Corpus.from_messages(messages),
        followers=FollowerEdgeList.from_pairs(follows),
        truth=truth,
        planted=planted,
    )
    logger.info(
        "synth.generated",
        users=len(users),
        messages=len(messages),
        follower_edges=len(result.followers.edges),
        seed=config.seed,
    )
    return result


@dataclass(frozen=True, slots=True)
class Mismatch:
    message_id: str
    text: str
    planted: int
    recovered: int


@dataclass(frozen=True, slots=True)
class RoundtripReport:
    checked: int
    mismatches: tuple[Mismatch, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.mismatches

    def to_dict(self) -> dict[str, object]:
        return {
            "checked": self.checked,
            "ok": self.ok,
            "mismatches": [
                {"id": m.message_id, "text": m.text, "planted": m.planted, "recovered": m.recovered}
                for m in self.mismatches
            ],
        }


def verify_roundtrip(config: SynthConfig, *, lexicon: Lexicon | None = None) -> RoundtripReport:
    lexicon = lexicon if lexicon is not None else load_test_lexicon()
    with suppress_logs():
        result = generate(config)
    mismatches = []
    for message in result.corpus.messages:
        recovered = score_text(lexicon, message.text).difference
        if recovered != result.planted[message.id]:
            mismatches.append(
                Mismatch(message.id, message.text, result.planted[message.id], recovered)
            )
    report = RoundtripReport(checked=len(result.corpus), mismatches=tuple(mismatches))
    if not report.ok:
        logger.warning("synth.roundtrip.mismatch", mismatches=len(mismatches))
    return report


def template_sweep(*, lexicon: Lexicon | None = None) -> RoundtripReport:
    """Score every (positive, negative) template cell and every message kind."""
    lexicon = lexicon if lexicon is not None else load_test_lexicon()
    mismatches = []
    checked = 0
    for positive, negative in sweep_cells():
        for kind in MESSAGE_KINDS:
            text = render_text(positive, negative, "u00001", kind, "vote")
            score = score_text(lexicon, text)
            checked += 1
            if (score.positive, score.negative) != (positive, negative):
                cell = f"{positive}/{negative}/{kind}"
                mismatches.append(Mismatch(cell, text, positive + negative, score.difference))
    return RoundtripReport(checked=checked, mismatches=tuple(mismatches))


def write_synth(result: SynthResult, out_dir: Path) -> dict[str, Path]:
    paths = {
        "corpus": out_dir / "messages.jsonl",
        "followers": out_dir / "followers.csv",
        "truth": out_dir / "truth.csv",
    }
    write_corpus(result.corpus, paths["corpus"])
    write_followers(result.followers, paths["followers"])
    pd.DataFrame(sorted(result.truth.items()), columns=["user", "group"]).to_csv(
        paths["truth"], index=False, lineterminator="\n"
    )
    return paths


def group_sizes(truth: dict[UserId, str]) -> dict[str, int]:
    sizes: dict[str, int] = {}
    for label in truth.values():
        sizes[label] = sizes.get(label, 0) + 1
    return dict(sorted(sizes.items()))


def expected_mentions(config: SynthConfig, gi: int, gj: int) -> float:
    """Expected message count from group gi to group gj without activity weights."""
    n_i, n_j = config.groups[gi], config.groups[gj]
    pairs = n_i * (n_j - 1) if gi == gj else n_i * n_j
    return config.mention_rate[gi][gj] * pairs


def sweep_cells() -> Sequence[tuple[int, int]]:
    return [(p, n) for p in range(1, 6) for n in range(-1, -6, -1)]
