"""Post content classification: sentiment, strong verbs, event hashtags, topics."""

from .labels import (
    EVENT_TAGS,
    STRONG_VERBS,
    ContentConfig,
    ContentLabel,
    classify_actional_verbs,
    classify_informational,
    inflections,
    label_post,
    label_text,
    user_content_ratios,
    verb_forms,
)
from .sentiment import (
    NEGATIVE,
    NEUTRAL,
    POSITIVE,
    UNCLASSIFIED,
    SentimentScores,
    load_lexicon,
    mean_valence,
    sentiment_class,
    sentiment_scores,
)
from .topics import TopicModel, fit_topics, topic_likelihood, topic_scores, write_topic_dump
from ..text import Token, tokenize

__all__ = [
    "EVENT_TAGS", "STRONG_VERBS", "ContentConfig", "ContentLabel", "classify_actional_verbs",
    "classify_informational", "inflections", "label_post", "label_text", "user_content_ratios",
    "verb_forms", "NEGATIVE", "NEUTRAL", "POSITIVE", "UNCLASSIFIED", "SentimentScores",
    "load_lexicon", "mean_valence", "sentiment_class", "sentiment_scores", "TopicModel",
    "fit_topics", "topic_likelihood", "topic_scores", "write_topic_dump", "Token", "tokenize",
]
