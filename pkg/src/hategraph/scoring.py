"""Utterance-level classification and a deterministic stand-in scorer.

Production datasets come with precomputed per-post probabilities from an
upstream model; the lexicon scorer exists so the whole pipeline can run
hermetically on raw text.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import DataFormatError

DEFAULT_TAU_T = 0.5

_TOKEN_RE = re.compile(r"[a-z0-9]+")


@dataclass(slots=True)
class UtteranceDecision:
    score: float
    label: int
    threshold_used: float


def classify_utterance(score: float, tau_t: float = DEFAULT_TAU_T) -> UtteranceDecision:
    """Binarize a post's hate probability: label 1 iff score >= tau_t."""
    if not 0.0 <= score <= 1.0:
        raise ValueError(f"score {score} outside [0, 1]")
    if not 0.0 < tau_t <= 1.0:
        raise ValueError(f"tau_t {tau_t} outside (0, 1]")
    return UtteranceDecision(
        score=score, label=int(score >= tau_t), threshold_used=tau_t
    )


@dataclass
class LexiconScorer:
    """Bag-of-terms scorer: logistic squash of bias + matched term weights."""

    term_weights: dict[str, float]
    bias: float = 0.0


def stub_score(text: str, scorer: LexiconScorer) -> float:
    """Deterministic lexicon score in [0, 1].

    Tokenization lowercases and splits on non-alphanumerics; every token
    occurrence adds its term weight.
    """
    total = scorer.bias
    for token in _TOKEN_RE.findall(text.lower()):
        total += scorer.term_weights.get(token, 0.0)
    return _logistic(total)


def _logistic(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def load_lexicon(path: str | Path) -> LexiconScorer:
    """Read a ``term,weight`` CSV; a ``__bias__`` row sets the intercept."""
    path = Path(path)
    weights: dict[str, float] = {}
    bias = 0.0
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("empty lexicon file", str(path), 1)
        if [h.strip() for h in header] != ["term", "weight"]:
            raise DataFormatError(
                f"expected header 'term,weight', got {','.join(header)!r}", str(path), 1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataFormatError(f"expected 2 fields, got {len(row)}", str(path), lineno)
            term = row[0].strip()
            try:
                weight = float(row[1])
            except ValueError:
                raise DataFormatError(f"bad weight {row[1]!r}", str(path), lineno)
            if term == "__bias__":
                bias = weight
            else:
                weights[term.lower()] = weight
    return LexiconScorer(term_weights=weights, bias=bias)
