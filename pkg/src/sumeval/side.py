"""Code-grounded summary scoring from contrastive-encoder embeddings.

The score itself is the cosine similarity between the encoder's code and
summary vectors, in [-1, 1]. Checkpoint selection averages the per-item gap
between positive-pair and negative-pair similarities; a model that returns
1.0 for every positive and -1.0 for every negative scores 2.0 under the
verbatim formula (pass halved=True for the 1.0 convention).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

from .corpus import EmbeddingRecord
from .overlap import MetricScore
from .vector import MetricInputError, embedding_similarity

SIDE_PROVIDER = "side-encoder"


def side_score(code_emb: EmbeddingRecord, summary_emb: EmbeddingRecord) -> MetricScore:
    """Cosine similarity between side-encoder code and summary embeddings."""
    if code_emb.provider != SIDE_PROVIDER or summary_emb.provider != SIDE_PROVIDER:
        raise MetricInputError(
            f"SIDE needs provider {SIDE_PROVIDER!r}, "
            f"got {code_emb.provider!r}/{summary_emb.provider!r}"
        )
    cosine, _ = embedding_similarity(code_emb, summary_emb)
    return MetricScore("SIDE", cosine, lo=-1.0, hi=1.0)


def checkpoint_score(
    pos_sims: Sequence[float], neg_sims: Sequence[float], halved: bool = False
) -> float:
    """Mean over validation items of (positive similarity - negative similarity)."""
    if not pos_sims or not neg_sims:
        raise ValueError("checkpoint_score needs non-empty similarity lists")
    if len(pos_sims) != len(neg_sims):
        raise ValueError(
            f"positive/negative lists must have equal length, "
            f"got {len(pos_sims)} vs {len(neg_sims)}"
        )
    score = sum(p - n for p, n in zip(pos_sims, neg_sims)) / len(pos_sims)
    return score / 2.0 if halved else score


@dataclass(frozen=True)
class CheckpointEval:
    checkpoint_id: str
    score: float
    step: Optional[int] = None


def rank_checkpoints(evaluations: Sequence[CheckpointEval]) -> list[CheckpointEval]:
    """Order best-first by score; ties prefer the later training step.

    Without explicit steps, later input position stands in for a later step.
    """
    if not evaluations:
        raise ValueError("rank_checkpoints needs at least one evaluation")
    indexed = list(enumerate(evaluations))
    indexed.sort(key=lambda e: (e[1].score, e[1].step if e[1].step is not None else e[0]), reverse=True)
    return [e for _, e in indexed]
