"""Per-post actional / informational / emotional labels."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .sentiment import (
    NEGATIVE,
    NEUTRAL,
    POSITIVE,
    SENTIMENT_THRESHOLD,
    sentiment_class,
    sentiment_scores,
)
from .topics import TOPIC_THRESHOLD, TopicModel, topic_likelihood
from ..text import Token, tokenize

STRONG_VERBS = ("do", "go", "say", "watch", "want", "need")
EVENT_TAGS = ("sandy", "storm", "hurricane")

_IRREGULAR = {
    "do": ("do", "does", "did", "doing", "done"),
    "go": ("go", "goes", "went", "going", "gone"),
    "say": ("say", "says", "said", "saying"),
    "be": ("be", "is", "am", "are", "was", "were", "being", "been"),
    "have": ("have", "has", "had", "having"),
    "get": ("get", "gets", "got", "getting", "gotten"),
    "make": ("make", "makes", "made", "making"),
    "take": ("take", "takes", "took", "taking", "taken"),
    "come": ("come", "comes", "came", "coming"),
    "see": ("see", "sees", "saw", "seeing", "seen"),
    "leave": ("leave", "leaves", "left", "leaving"),
    "run": ("run", "runs", "ran", "running"),
    "drive": ("drive", "drives", "drove", "driving", "driven"),
    "stay": ("stay", "stays", "stayed", "staying"),
}


def inflections(lemma: str) -> tuple[str, ...]:
    """Standard English forms of a verb: base, 3rd person, past, participles."""
    lemma = lemma.lower()
    if lemma in _IRREGULAR:
        return _IRREGULAR[lemma]
    if lemma.endswith(("s", "x", "z", "ch", "sh")):
        third = lemma + "es"
    elif lemma.endswith("y") and lemma[-2:-1] not in "aeiou":
        third = lemma[:-1] + "ies"
    else:
        third = lemma + "s"
    if lemma.endswith("e"):
        past, ing = lemma + "d", lemma[:-1] + "ing"
    elif lemma.endswith("y") and lemma[-2:-1] not in "aeiou":
        past, ing = lemma[:-1] + "ied", lemma + "ing"
    else:
        past, ing = lemma + "ed", lemma + "ing"
    return (lemma, third, past, ing)


def verb_forms(lemmas: Iterable[str] = STRONG_VERBS) -> frozenset[str]:
    return frozenset(form for lemma in lemmas for form in inflections(lemma))


_DEFAULT_FORMS = verb_forms()


def classify_actional_verbs(tokens: Iterable[str], forms: frozenset[str] = _DEFAULT_FORMS) -> bool:
    return any(t in forms for t in tokens)


def classify_informational(tokens: Iterable[Token], sentiment: str,
                           event_tags: Iterable[str] = EVENT_TAGS) -> bool:
    """Neutral post carrying an event hashtag."""
    if sentiment != NEUTRAL:
        return False
    tags = set(event_tags)
    return any(getattr(t, "is_hashtag", False) and t in tags for t in tokens)


@dataclass(frozen=True)
class ContentConfig:
    strong_verbs: tuple[str, ...] = STRONG_VERBS
    event_tags: tuple[str, ...] = EVENT_TAGS
    sentiment_threshold: float = SENTIMENT_THRESHOLD
    topic_threshold: float = TOPIC_THRESHOLD

    @property
    def verb_forms(self) -> frozenset[str]:
        return verb_forms(self.strong_verbs)


@dataclass(frozen=True)
class ContentLabel:
    actional: bool
    informational: bool
    sentiment_class: str
    by_verb: bool = False
    by_topic: bool = False
    topic_score: float = 0.0

    @property
    def emotional(self) -> bool:
        return self.sentiment_class in (NEGATIVE, POSITIVE)


def label_text(text: str, model: TopicModel | None, lexicon: Mapping[str, float],
               cfg: ContentConfig = ContentConfig()) -> ContentLabel:
    tokens = tokenize(text)
    sentiment = sentiment_class(sentiment_scores(tokens, lexicon), cfg.sentiment_threshold)
    by_verb = classify_actional_verbs(tokens, cfg.verb_forms)
    informational = classify_informational(tokens, sentiment, cfg.event_tags)
    score = topic_likelihood(model, tokens) if model is not None else 0.0
    by_topic = score > cfg.topic_threshold
    return ContentLabel(by_verb or informational or by_topic, informational, sentiment,
                        by_verb, by_topic, score)


def label_post(post, model: TopicModel | None, lexicon: Mapping[str, float],
               cfg: ContentConfig = ContentConfig()) -> ContentLabel:
    """Label one post; any object with a ``text`` attribute works."""
    return label_text(post.text, model, lexicon, cfg)


def user_content_ratios(labels: Sequence[ContentLabel]) -> tuple[float, float, float]:
    """(informational, actional, emotional) shares of one user's posts."""
    n = len(labels)
    if n == 0:
        raise ValueError("user has no posts")
    return (
        sum(l.informational for l in labels) / n,
        sum(l.actional for l in labels) / n,
        sum(l.emotional for l in labels) / n,
    )
