"""Bag-of-words topics from official-account posts.

Documents are TF-IDF vectors; topics are the centroids of a seeded
spherical k-means (cosine distance), rescaled to sum to one. A post's
topic likelihood is the sum of its cosine similarities to the k topics.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..errors import InsufficientDataError
from .sentiment import STOPWORDS

TOPIC_THRESHOLD = 0.66
DEFAULT_K = 4
# pairwise topic cosine above which the model is flagged as degenerate
DEGENERATE_COSINE = 0.999


def _content_words(tokens: Sequence[str]) -> list[str]:
    return [str(t) for t in tokens if t not in STOPWORDS and not t.isdigit()]


@dataclass
class TopicModel:
    vocabulary: dict[str, int]
    idf: np.ndarray
    topics: np.ndarray  # (k, V), rows non-negative and summing to 1
    seed: int
    n_documents: int
    degenerate: bool = False
    sizes: list[int] = field(default_factory=list)

    @property
    def k(self) -> int:
        return self.topics.shape[0]

    def vectorize(self, tokens: Sequence[str]) -> np.ndarray:
        vec = np.zeros(len(self.vocabulary))
        for term, count in Counter(_content_words(tokens)).items():
            idx = self.vocabulary.get(term)
            if idx is not None:
                vec[idx] = count * self.idf[idx]
        return vec

    def top_terms(self, n: int = 50) -> list[list[tuple[str, float]]]:
        terms = sorted(self.vocabulary, key=self.vocabulary.get)
        out = []
        for row in self.topics:
            # ties broken alphabetically via the stable sort over sorted terms
            order = sorted(range(len(terms)), key=lambda i: -row[i])[:n]
            out.append([(terms[i], float(row[i])) for i in order if row[i] > 0])
        return out

    def dump(self, n: int = 50) -> dict:
        """Audit view: top ``n`` weighted terms per topic."""
        return {
            "k": self.k,
            "seed": self.seed,
            "n_documents": self.n_documents,
            "vocabulary_size": len(self.vocabulary),
            "degenerate": self.degenerate,
            "cluster_sizes": list(self.sizes),
            "topics": [
                {"topic": i, "terms": [[t, w] for t, w in terms]}
                for i, terms in enumerate(self.top_terms(n))
            ],
        }


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    for _ in range(1, k):
        sims = x @ x[chosen].T
        d2 = np.clip(1.0 - sims.max(axis=1), 0.0, None) ** 2
        d2[chosen] = 0.0
        total = d2.sum()
        if total <= 1e-15:
            # every remaining document duplicates a chosen one
            pool = np.setdiff1d(np.arange(n), chosen)
            chosen.append(int(rng.choice(pool)))
        else:
            chosen.append(int(rng.choice(n, p=d2 / total)))
    return x[chosen].copy()


def _normalize_rows(m: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(m, axis=1, keepdims=True)
    return np.divide(m, norms, out=np.zeros_like(m), where=norms > 0)


def fit_topics(documents: Sequence[Sequence[str]], k: int = DEFAULT_K, seed: int = 0,
               max_iter: int = 100) -> TopicModel:
    """Fit ``k`` topics to tokenized documents.

    Raises:
        InsufficientDataError: fewer than ``k`` documents with content words.
    """
    docs = [_content_words(d) for d in documents]
    docs = [d for d in docs if d]
    if len(docs) < k:
        raise InsufficientDataError(f"topic fitting needs at least {k} non-empty documents, got {len(docs)}")

    terms = sorted({t for d in docs for t in d})
    vocabulary = {t: i for i, t in enumerate(terms)}
    df = np.zeros(len(terms))
    for d in docs:
        for t in set(d):
            df[vocabulary[t]] += 1
    n = len(docs)
    idf = np.log((1.0 + n) / (1.0 + df)) + 1.0

    tf = np.zeros((n, len(terms)))
    for i, d in enumerate(docs):
        for t, c in Counter(d).items():
            tf[i, vocabulary[t]] = c
    x = _normalize_rows(tf * idf)

    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(x, k, rng)
    labels = np.full(n, -1)
    for _ in range(max_iter):
        new_labels = np.argmax(x @ centers.T, axis=1)
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            members = x[labels == j]
            if len(members):
                centers[j] = members.mean(axis=0)
            else:
                # re-seed an empty cluster at the worst-fitting document
                fit = (x * centers[labels]).sum(axis=1)
                far = int(np.argmin(fit))
                centers[j] = x[far]
                labels[far] = j
        centers = _normalize_rows(centers)

    sizes = [int((labels == j).sum()) for j in range(k)]
    sums = centers.sum(axis=1, keepdims=True)
    topics = np.divide(centers, sums, out=np.zeros_like(centers), where=sums > 0)
    unit = _normalize_rows(topics)
    sim = unit @ unit.T
    degenerate = bool(np.any(sim[np.triu_indices(k, 1)] > DEGENERATE_COSINE))
    return TopicModel(vocabulary, idf, topics, seed, n, degenerate, sizes)


def topic_scores(model: TopicModel, tokens: Sequence[str]) -> list[float]:
    """Cosine similarity of the post's TF-IDF vector to each topic."""
    vec = model.vectorize(tokens)
    norm = np.linalg.norm(vec)
    if norm == 0:
        return [0.0] * model.k
    out = []
    for row in model.topics:
        rn = np.linalg.norm(row)
        out.append(0.0 if rn == 0 else min(1.0, float(vec @ row / (norm * rn))))
    return out


def topic_likelihood(model: TopicModel, tokens: Sequence[str]) -> float:
    """Summed topic match in [0, k]."""
    return math.fsum(topic_scores(model, tokens))


def write_topic_dump(model: TopicModel, n: int = 50) -> str:
    return json.dumps(model.dump(n), indent=2, sort_keys=True) + "\n"
