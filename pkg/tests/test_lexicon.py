from __future__ import annotations

import numpy as np
import pytest

from alignet.lexicon import (
    BOOSTER_VALUES,
    Lexicon,
    LexiconError,
    LexiconTerm,
    distribution_to_dict,
    load_lexicon,
    normalize_tokens,
    read_scores,
    score_corpus,
    score_distribution,
    score_text,
    write_scores,
)
from alignet.model import NEUTRAL_SCORE, Corpus, SentimentScore

PUNCTUATION = "!?.,;:'\"()-"

SMALL = Lexicon(
    terms={"good": LexiconTerm(3), "bad": LexiconTerm(-3), "happ": LexiconTerm(3, stem=True)},
    boosters={"very": 1},
    negations=frozenset({"not"}),
)


def _write_tsv(tmp_path, body: str):
    path = tmp_path / "lexicon.tsv"
    path.write_text(body, encoding="utf-8")
    return path


def test_load_lexicon_sorts_entries_into_categories(tmp_path) -> None:
    body = "term\tclass\tvalue\ngood\tterm\t3\nbad\tterm\t-3\nvery\tbooster\t1\nnot\tnegation\t\n"
    path = _write_tsv(tmp_path, body)
    lexicon = load_lexicon(path)
    assert set(lexicon.terms) == {"good", "bad"}
    assert lexicon.boosters == {"very": 1}
    assert lexicon.negations == frozenset({"not"})


def test_term_in_two_categories_is_rejected(tmp_path) -> None:
    path = _write_tsv(tmp_path, "term\tclass\tvalue\ngood\tterm\t3\ngood\tnegation\t\n")
    with pytest.raises(LexiconError, match="good"):
        load_lexicon(path)


def test_strength_out_of_range_is_rejected(tmp_path) -> None:
    path = _write_tsv(tmp_path, "term\tclass\tvalue\nmeh\tterm\t1\n")
    with pytest.raises(LexiconError, match="meh"):
        load_lexicon(path)


def test_empty_lexicon_scores_everything_neutral(tmp_path) -> None:
    lexicon = load_lexicon(_write_tsv(tmp_path, ""))
    assert lexicon.is_empty
    assert score_text(lexicon, "good great wonderful") == NEUTRAL_SCORE


def test_bundled_lexicon_loads(test_lexicon) -> None:
    assert test_lexicon.terms["good"] == LexiconTerm(3)
    assert test_lexicon.terms["happ"].stem
    assert "not" in test_lexicon.negations


@pytest.mark.parametrize(
    ("text", "expected"),
    [
        ("Goooood!!", [("good", True)]),
        ("soo good", [("soo", False), ("good", False)]),
        ("Hello, WORLD", [("hello", False), ("world", False)]),
        ("!!! ...", []),
    ],
)
def test_normalize_tokens(text, expected) -> None:
    assert normalize_tokens(text) == expected


@pytest.mark.parametrize(
    ("text", "positive", "negative"),
    [
        ("i feel good", 3, -1),
        ("not good", 1, -3),
        ("very bad", 1, -4),
        ("goooood", 4, -1),
        ("not not good", 1, -3),
        ("good but bad", 3, -3),
        ("so happy", 3, -1),
        ("nothing here", 1, -1),
    ],
)
def test_score_text(text, positive, negative) -> None:
    assert score_text(SMALL, text) == SentimentScore(positive, negative)


def test_negation_outside_window_is_ignored() -> None:
    assert score_text(SMALL, "not one two good") == SentimentScore(3, -1)


def _random_lexicon(rng: np.random.Generator, vocab: list[str]) -> Lexicon:
    words = list(rng.permutation(vocab))
    terms = {
        w: LexiconTerm(int(rng.choice([-5, -4, -3, -2, 2, 3, 4, 5])), stem=bool(rng.random() < 0.2))
        for w in words[:12]
    }
    boosters = {w: int(rng.choice(sorted(BOOSTER_VALUES))) for w in words[12:16]}
    return Lexicon(terms=terms, boosters=boosters, negations=frozenset(words[16:19]))


def test_scores_stay_in_range_for_random_texts() -> None:
    vocab = [f"w{i}" for i in range(30)]
    rng = np.random.default_rng(7)
    lexicons = [_random_lexicon(rng, vocab) for _ in range(20)]
    for n in range(10_000):
        lexicon = lexicons[n % len(lexicons)]
        length = int(rng.integers(0, 12))
        words = [str(w) + ("ooo" if rng.random() < 0.1 else "") for w in rng.choice(vocab, length)]
        score = score_text(lexicon, " ".join(words))
        assert 1 <= score.positive <= 5
        assert -5 <= score.negative <= -1
        assert -4 <= score.difference <= 4


def _perturb(rng: np.random.Generator, text: str) -> str:
    chars = [c.upper() if rng.random() < 0.5 else c for c in text]
    for _ in range(int(rng.integers(0, 6))):
        chars.insert(int(rng.integers(0, len(chars) + 1)), str(rng.choice(list(PUNCTUATION))))
    return "".join(chars)


def test_scores_ignore_case_and_punctuation() -> None:
    vocab = [f"w{i}" for i in range(30)]
    rng = np.random.default_rng(11)
    lexicons = [_random_lexicon(rng, vocab) for _ in range(10)]
    for n in range(2_000):
        lexicon = lexicons[n % len(lexicons)]
        words = [str(w) + ("ooo" if rng.random() < 0.1 else "") for w in rng.choice(vocab, 8)]
        text = " ".join(words)
        assert score_text(lexicon, _perturb(rng, text)) == score_text(lexicon, text)
    assert score_text(SMALL, "NOT, Good!!") == score_text(SMALL, "not good")


def test_score_distribution_counts_every_cell() -> None:
    scores = {
        "m1": SentimentScore(1, -1),
        "m2": SentimentScore(3, -3),
        "m3": SentimentScore(4, -1),
        "m4": SentimentScore(1, -1),
    }
    distribution = score_distribution(scores)
    assert len(distribution.joint) == 25
    assert distribution.difference[0] == 3
    assert distribution.difference[3] == 1
    assert distribution.zero_fraction == pytest.approx(0.75)
    assert distribution.neutral_share_of_zero == pytest.approx(2 / 3)
    summary = distribution_to_dict(distribution)
    assert summary["total"] == 4
    assert summary["difference"]["-4"] == 0


def test_scores_file_reloads(tmp_path) -> None:
    scores = {"m2": SentimentScore(2, -5), "m1": SentimentScore(1, -1)}
    path = tmp_path / "scores.csv"
    write_scores(scores, path)
    assert read_scores(path) == scores
    assert path.read_text().splitlines()[0] == "id,positive,negative,difference"


def test_score_corpus_scores_every_message(make_message) -> None:
    texts = {"m1": "very good", "m2": "not bad at all", "m3": "nothing here"}
    corpus = Corpus.from_messages(
        make_message(mid, "a", ts=i, text=text) for i, (mid, text) in enumerate(texts.items())
    )
    scores = score_corpus(SMALL, corpus, threads=2)
    assert scores == {mid: score_text(SMALL, text) for mid, text in texts.items()}
    assert scores["m3"] == NEUTRAL_SCORE
