"""Per-pair metric computation feeding the metric matrix CSV.

Overlap metrics and TF-IDF are computed natively from the pair texts;
embedding metrics look up EmbeddingRecords keyed by `<pair_id>:gen`,
`<pair_id>:ref`, and `<pair_id>:code` for the relevant provider. Metrics
whose inputs are missing leave empty cells and are listed in the returned
manifest; strict mode turns any gap into an error instead.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

from .corpus import EmbeddingRecord, ScoredPair
from .overlap import (
    bleu_a,
    bleu_n,
    c_coeff,
    chrf,
    jaccard,
    meteor,
    rouge_l,
    rouge_n,
    rouge_w,
)
from .registry import ALL_METRICS, OVERLAP_METRICS, VECTOR_METRICS
from .side import side_score
from .textnorm import SynonymTable, tokenize_code, tokenize_summary
from .vector import MetricInputError, bertscore, embedding_similarity, fit_tfidf, tfidf_scores


class ScoringError(Exception):
    """Strict-mode failure: requested metrics lack required inputs."""


@dataclass(frozen=True)
class ScoringConfig:
    metrics: tuple[str, ...] = ALL_METRICS
    brevity_penalty: bool = True
    rouge_w_weight: float = 1.2
    chrf_max_n: int = 6
    chrf_beta: float = 2.0
    normalize_embeddings: bool = False
    synonyms: Optional[SynonymTable] = None
    strict: bool = False

    def __post_init__(self) -> None:
        unknown = [m for m in self.metrics if m not in ALL_METRICS]
        if unknown:
            raise ScoringError(f"unknown metrics: {', '.join(unknown)}")


def expand_metric_selection(spec: str) -> tuple[str, ...]:
    """Expand 'all' | 'overlap' | 'vector' | comma-separated names."""
    if spec == "all":
        return ALL_METRICS
    if spec == "overlap":
        return OVERLAP_METRICS
    if spec == "vector":
        return VECTOR_METRICS
    names = tuple(s.strip() for s in spec.split(",") if s.strip())
    unknown = [n for n in names if n not in ALL_METRICS]
    if unknown:
        raise ScoringError(f"unknown metrics: {', '.join(unknown)}")
    return names


@dataclass
class ScoringResult:
    columns: tuple[str, ...]
    rows: list[tuple[str, dict[str, float]]]
    skipped: dict[str, str] = field(default_factory=dict)  # metric -> reason
    partial: dict[str, int] = field(default_factory=dict)  # metric -> missing rows


class EmbeddingStore:
    """(provider, item_id) lookup over loaded EmbeddingRecords."""

    def __init__(self, records: Sequence[EmbeddingRecord] = ()):
        self._by_key: dict[tuple[str, str], EmbeddingRecord] = {}
        for rec in records:
            self._by_key[(rec.provider, rec.item_id)] = rec

    def add(self, records: Sequence[EmbeddingRecord]) -> None:
        for rec in records:
            self._by_key[(rec.provider, rec.item_id)] = rec

    def get(self, provider: str, item_id: str) -> Optional[EmbeddingRecord]:
        return self._by_key.get((provider, item_id))

    def has_provider(self, provider: str) -> bool:
        return any(p == provider for p, _ in self._by_key)


def _pair_overlap_scores(pair: ScoredPair, cfg: ScoringConfig) -> dict[str, float]:
    gen = tokenize_summary(pair.generated)
    ref = tokenize_summary(pair.reference)
    values: dict[str, float] = {}
    for n in (1, 2, 3, 4):
        values[f"BLEU-{n}"] = bleu_n(gen, ref, n, brevity_penalty=cfg.brevity_penalty).value
    values["BLEU-A"] = bleu_a(gen, ref, brevity_penalty=cfg.brevity_penalty).value
    for n in (1, 2, 3, 4):
        prf = rouge_n(gen, ref, n)
        values[f"ROUGE-{n}-P"] = prf.precision
        values[f"ROUGE-{n}-R"] = prf.recall
        values[f"ROUGE-{n}-F1"] = prf.f1
    prf = rouge_l(gen, ref)
    values["ROUGE-L-P"] = prf.precision
    values["ROUGE-L-R"] = prf.recall
    values["ROUGE-L-F1"] = prf.f1
    prf = rouge_w(gen, ref, weight=cfg.rouge_w_weight)
    values["ROUGE-W-P"] = prf.precision
    values["ROUGE-W-R"] = prf.recall
    values["ROUGE-W-F1"] = prf.f1
    values["METEOR"] = meteor(gen, ref, synonyms=cfg.synonyms).value
    values["chrF"] = chrf(pair.generated, pair.reference, cfg.chrf_max_n, cfg.chrf_beta).value
    values["Jaccard"] = jaccard(gen, ref).value
    if pair.code is not None:
        values["c_coeff"] = c_coeff(gen, tokenize_code(pair.code)).value
    return values


_SUMMARY_PAIR_PROVIDERS = {
    "SentenceBERT_CS": ("sentence-bert", 0),
    "SentenceBERT_ED": ("sentence-bert", 1),
    "InferSent_CS": ("infersent", 0),
    "InferSent_ED": ("infersent", 1),
    "USE_CS": ("use", 0),
    "USE_ED": ("use", 1),
}


def _pair_vector_scores(
    pair: ScoredPair,
    store: EmbeddingStore,
    cfg: ScoringConfig,
    missing: dict[str, list[str]],
) -> dict[str, float]:
    values: dict[str, float] = {}
    pid = pair.pair_id

    def _lookup(provider: str, role: str, metric: str) -> Optional[EmbeddingRecord]:
        rec = store.get(provider, f"{pid}:{role}")
        if rec is None:
            missing.setdefault(metric, []).append(f"{pid}:{role} ({provider})")
        return rec

    sim_cache: dict[str, tuple[float, float]] = {}
    for metric, (provider, component) in _SUMMARY_PAIR_PROVIDERS.items():
        if provider not in sim_cache:
            gen = _lookup(provider, "gen", metric)
            ref = _lookup(provider, "ref", metric)
            if gen is None or ref is None:
                continue
            try:
                sim_cache[provider] = embedding_similarity(
                    gen, ref, normalize=cfg.normalize_embeddings
                )
            except MetricInputError as exc:
                missing.setdefault(metric, []).append(f"{pid}: {exc}")
                continue
        values[metric] = sim_cache[provider][component]

    gen = _lookup("codet5p", "gen", "CodeT5-plus_CS")
    code = _lookup("codet5p", "code", "CodeT5-plus_CS")
    if gen is not None and code is not None:
        try:
            values["CodeT5-plus_CS"] = embedding_similarity(gen, code)[0]
        except MetricInputError as exc:
            missing.setdefault("CodeT5-plus_CS", []).append(f"{pid}: {exc}")

    gen = _lookup("side-encoder", "gen", "SIDE")
    code = _lookup("side-encoder", "code", "SIDE")
    if gen is not None and code is not None:
        try:
            values["SIDE"] = side_score(code, gen).value
        except MetricInputError as exc:
            missing.setdefault("SIDE", []).append(f"{pid}: {exc}")

    gen = _lookup("bert-token", "gen", "BERTScore-F1")
    ref = _lookup("bert-token", "ref", "BERTScore-F1")
    if gen is not None and ref is not None:
        try:
            prf = bertscore(gen, ref)
        except MetricInputError as exc:
            missing.setdefault("BERTScore-F1", []).append(f"{pid}: {exc}")
        else:
            values["BERTScore-P"] = prf.precision
            values["BERTScore-R"] = prf.recall
            values["BERTScore-F1"] = prf.f1
    return values


def score_pairs(
    pairs: Sequence[ScoredPair],
    store: Optional[EmbeddingStore] = None,
    cfg: Optional[ScoringConfig] = None,
) -> ScoringResult:
    """Compute every enabled metric for every pair, in registry column order."""
    cfg = cfg or ScoringConfig()
    store = store or EmbeddingStore()
    enabled = set(cfg.metrics)
    columns = tuple(m for m in ALL_METRICS if m in enabled)

    tfidf_model = None
    if "TF-IDF_CS" in enabled or "TF-IDF_ED" in enabled:
        docs = []
        for p in pairs:
            docs.append(tokenize_summary(p.generated))
            docs.append(tokenize_summary(p.reference))
        if docs:
            tfidf_model = fit_tfidf(docs)

    missing: dict[str, list[str]] = {}
    rows: list[tuple[str, dict[str, float]]] = []
    for pair in pairs:
        values: dict[str, float] = {}
        values.update(_pair_overlap_scores(pair, cfg))
        if pair.code is None and "c_coeff" in enabled:
            missing.setdefault("c_coeff", []).append(f"{pair.pair_id}: no code text")
        if tfidf_model is not None:
            cs, ed = tfidf_scores(
                tokenize_summary(pair.generated), tokenize_summary(pair.reference), tfidf_model
            )
            values["TF-IDF_CS"] = cs
            values["TF-IDF_ED"] = ed
        values.update(_pair_vector_scores(pair, store, cfg, missing))
        rows.append((pair.pair_id, {k: v for k, v in values.items() if k in enabled}))

    skipped: dict[str, str] = {}
    partial: dict[str, int] = {}
    for metric, items in sorted(missing.items()):
        if metric not in enabled:
            continue
        n_with_value = sum(1 for _, vals in rows if metric in vals)
        if n_with_value == 0:
            skipped[metric] = f"no inputs ({len(items)} pairs affected)"
        else:
            partial[metric] = len(items)
    if cfg.strict and (skipped or partial):
        troubled = ", ".join(sorted(set(skipped) | set(partial)))
        raise ScoringError(f"missing inputs for metrics: {troubled}")
    return ScoringResult(columns=columns, rows=rows, skipped=skipped, partial=partial)
