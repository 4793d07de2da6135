"""Rule-based lexicon sentiment scoring.

Every text gets a positive score in [1, 5] and a negative score in [-5, -1];
(1, -1) means nothing was detected. Matched terms are adjusted by three rules
before aggregation:

* emphasis: a token written with a letter repeated three or more times gains
  one step of magnitude;
* boosters: the nearest booster word among the preceding tokens changes the
  magnitude by its value;
* negation: the nearest negation among the preceding tokens flips the sign,
  once, no matter how many negations are present.

Adjusted magnitudes are clamped to [1, 5]; the positive score is the largest
positive strength and the negative score the most negative one.
"""

from __future__ import annotations

import re
from collections import Counter
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Literal, NamedTuple

import pandas as pd

from .errors import ValidationError
from .logging import get_logger
from .model import NEUTRAL_SCORE, Corpus, SentimentScore
from .utils.parallel import ordered_map

logger = get_logger(__name__)

type EntryClass = Literal["term", "booster", "negation"]

BOOSTER_VALUES = frozenset({-2, -1, 1, 2})
DEFAULT_WINDOW = 2
EMPHASIS_BONUS = 1

_STRIP_RE = re.compile(r"[\W_]+")
_RUN_RE = re.compile(r"([^\W\d_])\1{2,}")


class LexiconError(ValidationError):
    pass


@dataclass(frozen=True, slots=True)
class LexiconTerm:
    strength: int
    stem: bool = False


@dataclass(frozen=True, slots=True)
class Lexicon:
    terms: Mapping[str, LexiconTerm] = field(default_factory=dict)
    boosters: Mapping[str, int] = field(default_factory=dict)
    negations: frozenset[str] = field(default=frozenset())

    def __post_init__(self) -> None:
        _validate_entries(self.terms, self.boosters, self.negations)

    @property
    def is_empty(self) -> bool:
        return not (self.terms or self.boosters or self.negations)

    def strength_of(self, token: str) -> int | None:
        exact = self.terms.get(token)
        if exact is not None and not exact.stem:
            return exact.strength
        for end in range(len(token), 0, -1):
            entry = self.terms.get(token[:end])
            if entry is not None and entry.stem:
                return entry.strength
        return None


def _validate_entries(
    terms: Mapping[str, LexiconTerm],
    boosters: Mapping[str, int],
    negations: Iterable[str],
) -> None:
    for word, entry in terms.items():
        if not 2 <= abs(entry.strength) <= 5:
            raise LexiconError(
                f"Strength {entry.strength} for {word!r} is outside [2, 5] / [-5, -2]."
            )
    for word, value in boosters.items():
        if value not in BOOSTER_VALUES:
            raise LexiconError(f"Booster {word!r} has value {value}; expected one of -2, -1, 1, 2.")
    term_set, booster_set, negation_set = set(terms), set(boosters), set(negations)
    shared = (term_set & booster_set) | (term_set & negation_set) | (booster_set & negation_set)
    if shared:
        raise LexiconError(f"Term {min(shared)!r} appears in more than one lexicon category.")


class Token(NamedTuple):
    text: str
    emphasis: bool
    single: str


def _tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    for raw in text.lower().split():
        word = _STRIP_RE.sub("", raw)
        if not word:
            continue
        doubled, runs = _RUN_RE.subn(r"\1\1", word)
        if runs:
            tokens.append(Token(doubled, True, _RUN_RE.sub(r"\1", word)))
        else:
            tokens.append(Token(word, False, word))
    return tokens


def normalize_tokens(text: str) -> list[tuple[str, bool]]:
    """Lowercased, punctuation-free tokens with their emphasis flag.

    >>> normalize_tokens("Goooood!!")
    [('good', True)]
    """
    return [(token.text, token.emphasis) for token in _tokenize(text)]


def _parse_int(value: str, *, line: int, word: str) -> int:
    try:
        return int(value.strip())
    except ValueError:
        raise LexiconError(
            f"line {line}: value {value!r} for {word!r} is not an integer."
        ) from None


def load_lexicon(path: Path | str) -> Lexicon:
    path = Path(path)
    try:
        frame = pd.read_csv(path, sep="\t", dtype=str, keep_default_na=False, encoding="utf-8")
    except pd.errors.EmptyDataError:
        logger.info("lexicon.loaded", path=str(path), terms=0, boosters=0, negations=0)
        return Lexicon()
    missing = {"term", "class", "value"} - set(frame.columns)
    if missing:
        raise LexiconError(f"{path}: missing column(s) {sorted(missing)}.")

    terms: dict[str, LexiconTerm] = {}
    boosters: dict[str, int] = {}
    negations: set[str] = set()
    seen: dict[str, str] = {}
    for line, row in enumerate(frame.itertuples(index=False), start=2):
        raw_term = str(row.term).strip().lower()
        entry_class = str(row[1]).strip().lower()
        stem = raw_term.endswith("*")
        word = raw_term.rstrip("*")
        if not word:
            raise LexiconError(f"{path}: line {line}: empty term.")
        if word in seen:
            raise LexiconError(
                f"{path}: term {word!r} listed as {seen[word]} and {entry_class} (line {line})."
            )
        seen[word] = entry_class
        if stem and entry_class != "term":
            raise LexiconError(
                f"{path}: line {line}: only sentiment terms may be stems ({raw_term!r})."
            )
        match entry_class:
            case "term":
                strength = _parse_int(row.value, line=line, word=word)
                if not 2 <= abs(strength) <= 5:
                    raise LexiconError(
                        f"{path}: line {line}: strength {strength} for {word!r} out of range."
                    )
                terms[word] = LexiconTerm(strength=strength, stem=stem)
            case "booster":
                boosters[word] = _parse_int(row.value, line=line, word=word)
            case "negation":
                negations.add(word)
            case _:
                raise LexiconError(f"{path}: line {line}: unknown class {entry_class!r}.")

    lexicon = Lexicon(terms=terms, boosters=boosters, negations=frozenset(negations))
    logger.info(
        "lexicon.loaded",
        path=str(path),
        terms=len(terms),
        boosters=len(boosters),
        negations=len(negations),
    )
    return lexicon


def bundled_lexicon_path() -> Path:
    return Path(str(resources.files("alignet") / "data" / "test_lexicon.tsv"))


def load_test_lexicon() -> Lexicon:
    return load_lexicon(bundled_lexicon_path())


def _clamp(magnitude: int) -> int:
    return max(1, min(5, magnitude))


def score_text(lexicon: Lexicon, text: str, *, window: int = DEFAULT_WINDOW) -> SentimentScore:
    if lexicon.is_empty:
        return NEUTRAL_SCORE
    tokens = _tokenize(text)
    positive = 1
    negative = -1
    for index, token in enumerate(tokens):
        strength = lexicon.strength_of(token.text)
        if strength is None and token.emphasis:
            strength = lexicon.strength_of(token.single)
        if strength is None:
            continue
        sign = 1 if strength > 0 else -1
        magnitude = abs(strength) + (EMPHASIS_BONUS if token.emphasis else 0)

        boosted = negated = False
        for previous in reversed(tokens[max(0, index - window) : index]):
            if not boosted:
                boost = lexicon.boosters.get(previous.text)
                if boost is None:
                    boost = lexicon.boosters.get(previous.single)
                if boost is not None:
                    magnitude += boost
                    boosted = True
            if not negated and (
                previous.text in lexicon.negations or previous.single in lexicon.negations
            ):
                sign = -sign
                negated = True

        adjusted = sign * _clamp(magnitude)
        if adjusted > 0:
            positive = max(positive, adjusted)
        else:
            negative = min(negative, adjusted)
    return SentimentScore(positive=positive, negative=negative)


def score_corpus(
    lexicon: Lexicon, corpus: Corpus, *, window: int = DEFAULT_WINDOW, threads: int = 1
) -> dict[str, SentimentScore]:
    messages = corpus.messages
    scores = ordered_map(
        lambda message: score_text(lexicon, message.text, window=window), messages, threads=threads
    )
    return {message.id: score for message, score in zip(messages, scores, strict=True)}


@dataclass(frozen=True, slots=True)
class ScoreDistribution:
    joint: Mapping[tuple[int, int], int]
    difference: Mapping[int, int]
    total: int

    @property
    def zero_fraction(self) -> float:
        return self.difference.get(0, 0) / self.total if self.total else 0.0

    @property
    def neutral_share_of_zero(self) -> float:
        zeros = self.difference.get(0, 0)
        return self.joint.get((1, -1), 0) / zeros if zeros else 0.0


def score_distribution(scores: Mapping[str, SentimentScore]) -> ScoreDistribution:
    joint = Counter((s.positive, s.negative) for s in scores.values())
    difference = Counter(s.difference for s in scores.values())
    cells = [(p, n) for p in range(1, 6) for n in range(-1, -6, -1)]
    return ScoreDistribution(
        joint={cell: joint.get(cell, 0) for cell in cells},
        difference={d: difference.get(d, 0) for d in range(-4, 5)},
        total=len(scores),
    )


SCORE_COLUMNS = ["id", "positive", "negative", "difference"]


def write_scores(scores: Mapping[str, SentimentScore], path: Path) -> None:
    rows = [(mid, s.positive, s.negative, s.difference) for mid, s in sorted(scores.items())]
    path.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows, columns=SCORE_COLUMNS).to_csv(path, index=False, lineterminator="\n")


def read_scores(path: Path) -> dict[str, SentimentScore]:
    frame = pd.read_csv(path, dtype={"id": str}, keep_default_na=False)
    return {
        str(row.id): SentimentScore(positive=int(row.positive), negative=int(row.negative))
        for row in frame.itertuples(index=False)
    }


def distribution_to_dict(distribution: ScoreDistribution) -> dict[str, object]:
    return {
        "total": distribution.total,
        "zero_fraction": distribution.zero_fraction,
        "neutral_share_of_zero": distribution.neutral_share_of_zero,
        "difference": {str(d): n for d, n in sorted(distribution.difference.items())},
        "joint": [
            {"positive": p, "negative": n, "count": count}
            for (p, n), count in sorted(distribution.joint.items())
        ],
    }
