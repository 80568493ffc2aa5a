"""Canonical metric names and CSV column order.

The names below are the exact column headers of metric matrix CSVs and the
keys accepted in EvaluationRecord.metric_values. Order is fixed so reruns
produce byte-identical files.
"""

from __future__ import annotations

OVERLAP_METRICS: tuple[str, ...] = (
    "BLEU-1",
    "BLEU-2",
    "BLEU-3",
    "BLEU-4",
    "BLEU-A",
    "ROUGE-1-P",
    "ROUGE-1-R",
    "ROUGE-1-F1",
    "ROUGE-2-P",
    "ROUGE-2-R",
    "ROUGE-2-F1",
    "ROUGE-3-P",
    "ROUGE-3-R",
    "ROUGE-3-F1",
    "ROUGE-4-P",
    "ROUGE-4-R",
    "ROUGE-4-F1",
    "ROUGE-L-P",
    "ROUGE-L-R",
    "ROUGE-L-F1",
    "ROUGE-W-P",
    "ROUGE-W-R",
    "ROUGE-W-F1",
    "METEOR",
    "chrF",
    "Jaccard",
    "c_coeff",
)

VECTOR_METRICS: tuple[str, ...] = (
    "TF-IDF_CS",
    "TF-IDF_ED",
    "BERTScore-P",
    "BERTScore-R",
    "BERTScore-F1",
    "SentenceBERT_CS",
    "SentenceBERT_ED",
    "InferSent_CS",
    "InferSent_ED",
    "USE_CS",
    "USE_ED",
    "CodeT5-plus_CS",
    "SIDE",
)

ALL_METRICS: tuple[str, ...] = OVERLAP_METRICS + VECTOR_METRICS

# sentence-embedding providers and the metric columns they feed
EMBEDDING_PROVIDERS: dict[str, tuple[str, ...]] = {
    "sentence-bert": ("SentenceBERT_CS", "SentenceBERT_ED"),
    "infersent": ("InferSent_CS", "InferSent_ED"),
    "use": ("USE_CS", "USE_ED"),
    "codet5p": ("CodeT5-plus_CS",),
    "side-encoder": ("SIDE",),
    "bert-token": ("BERTScore-P", "BERTScore-R", "BERTScore-F1"),
}


def is_registered(name: str) -> bool:
    return name in ALL_METRICS
