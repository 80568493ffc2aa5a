"""TF-IDF metrics plus embedding-derived metrics over ingested vectors.

The toolkit never loads neural models here: embedding metrics consume
EmbeddingRecord files produced by the encoder sidecar or any compatible
producer. Euclidean distances between provider vectors are computed on the
raw vectors by default (use normalize=True to L2-normalize first); TF-IDF
vectors are always L2-normalized at query time.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from .corpus import CorpusError, EmbeddingKind, EmbeddingRecord
from .overlap import PRF
from .textnorm import as_tokens


class MetricInputError(CorpusError):
    """Provider/dimension mismatch or degenerate vector input."""


@dataclass(frozen=True)
class TfIdfModel:
    """Vocabulary with smoothed idf weights: idf = ln((1+N)/(1+df)) + 1."""

    vocabulary: dict[str, int]
    idf: np.ndarray
    document_count: int

    def vectorize(self, tokens) -> np.ndarray:
        """Raw-count tf times idf, L2-normalized; OOV terms contribute nothing."""
        vec = np.zeros(len(self.vocabulary))
        for term, count in Counter(as_tokens(tokens)).items():
            idx = self.vocabulary.get(term)
            if idx is not None:
                vec[idx] = count * self.idf[idx]
        norm = np.linalg.norm(vec)
        return vec / norm if norm > 0 else vec


def fit_tfidf(documents) -> TfIdfModel:
    """Fit idf weights over a token-stream corpus (typically all summaries)."""
    docs = [as_tokens(d) for d in documents]
    if not docs:
        raise MetricInputError("cannot fit TF-IDF on an empty corpus")
    df: Counter = Counter()
    for doc in docs:
        df.update(set(doc))
    vocabulary = {term: i for i, term in enumerate(sorted(df))}
    n = len(docs)
    idf = np.empty(len(vocabulary))
    for term, idx in vocabulary.items():
        idf[idx] = np.log((1 + n) / (1 + df[term])) + 1.0
    return TfIdfModel(vocabulary=vocabulary, idf=idf, document_count=n)


def tfidf_scores(candidate, reference, model: TfIdfModel) -> tuple[float, float]:
    """(cosine, Euclidean distance) of the L2-normalized tf-idf vectors.

    Two all-zero vectors (both texts fully out of vocabulary) score (0.0, 0.0).
    """
    a = model.vectorize(candidate)
    b = model.vectorize(reference)
    if not a.any() and not b.any():
        return 0.0, 0.0
    return float(np.dot(a, b)), float(np.linalg.norm(a - b))


# ---------------------------------------------------------------------------
# Sentence-embedding similarity
# ---------------------------------------------------------------------------


def _check_pair(a: EmbeddingRecord, b: EmbeddingRecord, kind: EmbeddingKind) -> None:
    if a.kind is not kind or b.kind is not kind:
        raise MetricInputError(
            f"expected {kind.value} records, got {a.kind.value}/{b.kind.value}"
        )
    if a.provider != b.provider:
        raise MetricInputError(f"provider mismatch: {a.provider!r} vs {b.provider!r}")
    if a.dimension != b.dimension:
        raise MetricInputError(
            f"dimension mismatch for {a.item_id!r}/{b.item_id!r}: {a.dimension} vs {b.dimension}"
        )


def embedding_similarity(
    a: EmbeddingRecord, b: EmbeddingRecord, normalize: bool = False
) -> tuple[float, float]:
    """(cosine, Euclidean distance) between two sentence embeddings."""
    _check_pair(a, b, EmbeddingKind.SENTENCE)
    va = np.asarray(a.values)
    vb = np.asarray(b.values)
    na = np.linalg.norm(va)
    nb = np.linalg.norm(vb)
    if na == 0 or nb == 0:
        raise MetricInputError(f"zero vector for {a.item_id!r} or {b.item_id!r}")
    cosine = float(np.dot(va, vb) / (na * nb))
    if normalize:
        va = va / na
        vb = vb / nb
    return cosine, float(np.linalg.norm(va - vb))


def bertscore(candidate_tokens: EmbeddingRecord, reference_tokens: EmbeddingRecord) -> PRF:
    """Greedy token matching on cosine similarity; no idf weighting or rescaling.

    R averages, over reference tokens, the best similarity to any candidate
    token; P is symmetric; F1 is the harmonic mean.
    """
    _check_pair(candidate_tokens, reference_tokens, EmbeddingKind.TOKEN_MATRIX)
    cand = np.asarray(candidate_tokens.matrix())
    ref = np.asarray(reference_tokens.matrix())
    if cand.size == 0 or ref.size == 0:
        raise MetricInputError("empty token matrix")
    cand_norms = np.linalg.norm(cand, axis=1, keepdims=True)
    ref_norms = np.linalg.norm(ref, axis=1, keepdims=True)
    if np.any(cand_norms == 0) or np.any(ref_norms == 0):
        raise MetricInputError("zero token embedding row")
    sim = (cand / cand_norms) @ (ref / ref_norms).T
    p = float(sim.max(axis=1).mean())
    r = float(sim.max(axis=0).mean())
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return PRF(p, r, f1)
