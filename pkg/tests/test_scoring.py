import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from hategraph.errors import DataFormatError
from hategraph.scoring import (
    LexiconScorer,
    classify_utterance,
    load_lexicon,
    stub_score,
)


def test_just_over_default_threshold_is_hateful():
    assert classify_utterance(0.51, 0.5).label == 1


def test_boundary_is_inclusive():
    assert classify_utterance(0.5, 0.5).label == 1


def test_just_under_threshold():
    assert classify_utterance(0.49, 0.5).label == 0


def test_rejects_out_of_range():
    with pytest.raises(ValueError):
        classify_utterance(1.5, 0.5)
    with pytest.raises(ValueError):
        classify_utterance(0.5, 0.0)


@given(st.floats(0, 1), st.floats(0, 1))
def test_monotone_in_score(a, b):
    lo, hi = min(a, b), max(a, b)
    assert classify_utterance(lo, 0.5).label <= classify_utterance(hi, 0.5).label


@given(st.floats(0, 1), st.floats(0.01, 1.0))
def test_label_matches_threshold_used(score, tau):
    d = classify_utterance(score, tau)
    assert d.label == int(d.score >= d.threshold_used)


# ---- stub scorer ----------------------------------------------------------

def test_empty_text_zero_bias():
    assert stub_score("", LexiconScorer({}, bias=0.0)) == 0.5


def test_single_matched_term():
    # closed-form oracle: logistic(4)
    scorer = LexiconScorer({"slur": 4.0}, bias=0.0)
    expected = 1.0 / (1.0 + math.exp(-4.0))
    assert stub_score("a slur appeared", scorer) == pytest.approx(expected, abs=1e-12)
    assert stub_score("a slur appeared", scorer) == pytest.approx(0.982, abs=1e-3)


def test_no_match_negative_bias():
    scorer = LexiconScorer({"slur": 4.0}, bias=-4.0)
    expected = 1.0 / (1.0 + math.exp(4.0))
    assert stub_score("perfectly fine text", scorer) == pytest.approx(expected, abs=1e-12)
    assert stub_score("perfectly fine text", scorer) == pytest.approx(0.018, abs=1e-3)


def test_tokenization_case_and_punctuation():
    scorer = LexiconScorer({"bad": 2.0}, bias=0.0)
    assert stub_score("BAD!!!", scorer) == stub_score("bad", scorer)


@given(st.lists(st.sampled_from(["bad", "ok", "x1"]), max_size=8))
def test_token_order_and_whitespace_invariance(tokens):
    scorer = LexiconScorer({"bad": 1.5, "x1": -0.5}, bias=0.2)
    a = stub_score(" ".join(tokens), scorer)
    b = stub_score("   ".join(reversed(tokens)), scorer)
    assert a == pytest.approx(b, abs=1e-12)


@given(st.text(max_size=60))
def test_score_bounded(text):
    scorer = LexiconScorer({"a": 500.0, "b": -500.0}, bias=3.0)
    assert 0.0 <= stub_score(text, scorer) <= 1.0


def test_extreme_weights_no_overflow():
    assert stub_score("w", LexiconScorer({"w": 1e4})) == 1.0
    assert stub_score("w", LexiconScorer({"w": -1e4})) == pytest.approx(0.0, abs=1e-300)


def test_load_lexicon(tmp_path):
    f = tmp_path / "lex.csv"
    f.write_text("term,weight\nslur,4.0\n__bias__,-1.0\nOther,0.5\n")
    scorer = load_lexicon(f)
    assert scorer.bias == -1.0
    assert scorer.term_weights == {"slur": 4.0, "other": 0.5}


def test_load_lexicon_bad_weight(tmp_path):
    f = tmp_path / "lex.csv"
    f.write_text("term,weight\nslur,abc\n")
    with pytest.raises(DataFormatError, match=":2:"):
        load_lexicon(f)
