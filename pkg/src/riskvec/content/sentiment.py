"""Five-bin sentiment scores from a valence lexicon, and 3-way classing."""

from __future__ import annotations

import math
from dataclasses import astuple, dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

from ..errors import ValidationError

NEGATIVE = "negative"
NEUTRAL = "neutral"
POSITIVE = "positive"
UNCLASSIFIED = "unclassified"
SENTIMENT_THRESHOLD = 0.66

BIN_CENTERS = (-2.0, -1.0, 0.0, 1.0, 2.0)

# function words carry no valence and would only dilute the mean
STOPWORDS = frozenset("""
a about above after again against all am an and any are as at be because been before being below
between both but by can could did do does doing down during each few for from further had has have
having he her here hers herself him himself his how i if in into is it its itself just me more most
my myself no nor not now of off on once only or other our ours ourselves out over own same she should
so some such than that the their theirs them themselves then there these they this those through to
too under until up very was we were what when where which while who whom why will with would you your
yours yourself yourselves rt amp im u ur
""".split())


@dataclass(frozen=True)
class SentimentScores:
    very_negative: float
    negative: float
    neutral: float
    positive: float
    very_positive: float

    def __post_init__(self):
        values = astuple(self)
        if any(v < 0 for v in values) or abs(math.fsum(values) - 1.0) > 1e-9:
            raise ValidationError(f"sentiment scores must be a distribution, got {values}")

    def merged(self) -> dict[str, float]:
        return {
            NEGATIVE: self.very_negative + self.negative,
            NEUTRAL: self.neutral,
            POSITIVE: self.positive + self.very_positive,
        }


def load_lexicon(path: str | Path | None = None) -> dict[str, float]:
    """Read a ``token<TAB>valence`` file; ``#`` lines are comments.

    With no path the bundled lexicon is used.
    """
    if path is None:
        text = resources.files("riskvec").joinpath("data/valence_lexicon.tsv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    lexicon = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        try:
            token, value = line.split("\t")
            valence = float(value)
        except ValueError:
            raise ValidationError(f"lexicon line {lineno}: expected token<TAB>valence") from None
        if not -2.0 <= valence <= 2.0:
            raise ValidationError(f"lexicon line {lineno}: valence {valence} outside [-2, 2]")
        lexicon[token.strip().lower()] = valence
    return lexicon


def mean_valence(tokens: Iterable[str], lexicon: Mapping[str, float]) -> float | None:
    scored = [lexicon.get(t, 0.0) for t in tokens if t not in STOPWORDS]
    if not scored:
        return None
    return math.fsum(scored) / len(scored)


def sentiment_scores(tokens: Iterable[str], lexicon: Mapping[str, float]) -> SentimentScores:
    """Spread the mean token valence over the five bins with a unit triangular kernel.

    Stopwords are skipped; other tokens missing from the lexicon count as
    valence 0. No scoring tokens at all gives a pure neutral distribution.
    """
    v = mean_valence(tokens, lexicon)
    if v is None:
        return SentimentScores(0.0, 0.0, 1.0, 0.0, 0.0)
    v = min(2.0, max(-2.0, v))
    weights = [max(0.0, 1.0 - abs(v - c)) for c in BIN_CENTERS]
    total = math.fsum(weights)
    return SentimentScores(*(w / total for w in weights))


def sentiment_class(scores: SentimentScores, threshold: float = SENTIMENT_THRESHOLD) -> str:
    """The merged class strictly above ``threshold``, else ``unclassified``."""
    merged = scores.merged()
    # shares sum to 1, so at most one can exceed a threshold >= 0.5
    best = max(merged, key=merged.get)
    return best if merged[best] > threshold else UNCLASSIFIED
