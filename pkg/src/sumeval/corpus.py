"""Shared data model and on-disk corpus formats.

Everything is line-oriented: corpora, triplets, evaluation records, and
embeddings are JSONL (one object per line); metric matrices are CSV with a
`pair_id` column followed by registered metric names. Text is stored as
UTF-8 with no normalization; all normalization happens in textnorm.

Loaded values are immutable and safe to share across parallel workers.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .registry import is_registered
from .textnorm import count_summary_tokens


class CorpusError(Exception):
    """Raised on parse errors, duplicate ids, or invariant violations."""


class NegativeKind(str, Enum):
    RANDOM = "random"
    HARD = "hard"


@dataclass(frozen=True)
class InnerComment:
    """A comment inside a method body plus the statements it documents."""

    text: str
    covered_statements: int

    def __post_init__(self) -> None:
        if not self.text:
            raise CorpusError("InnerComment.text must be non-empty")
        if self.covered_statements < 0:
            raise CorpusError("InnerComment.covered_statements must be >= 0")


@dataclass(frozen=True)
class CodeUnit:
    """One Java method: body, extracted summary, inner comments, statements."""

    id: str
    source_text: str
    summary: Optional[str] = None
    inner_comments: tuple[InnerComment, ...] = ()
    statement_count: int = 0

    def __post_init__(self) -> None:
        if not self.id:
            raise CorpusError("CodeUnit.id must be non-empty")
        if self.statement_count < 0:
            raise CorpusError(f"CodeUnit {self.id!r}: statement_count must be >= 0")

    @property
    def token_count_summary(self) -> int:
        return count_summary_tokens(self.summary) if self.summary else 0

    def coverage_ratio(self, comment: InnerComment) -> float:
        """covered_statements / statement_count, clamped to [0, 1]; 0 for empty methods."""
        if self.statement_count <= 0:
            return 0.0
        return min(1.0, comment.covered_statements / self.statement_count)


@dataclass(frozen=True)
class Triplet:
    """Contrastive training instance: anchor code id, positive and negative summary."""

    anchor_id: str
    positive: str
    negative: str
    negative_kind: NegativeKind

    def __post_init__(self) -> None:
        if self.positive == self.negative:
            raise CorpusError(f"Triplet {self.anchor_id!r}: positive == negative")


_ORDINAL_RANGES = {
    "da_score": (0, 100),
    "content_adequacy": (0, 5),
    "conciseness": (0, 5),
    "fluency": (0, 5),
}


@dataclass(frozen=True)
class EvaluationRecord:
    """One human assessment row; ordinal fields may be absent (partial surveys)."""

    pair_id: str
    da_score: Optional[int] = None
    content_adequacy: Optional[int] = None
    conciseness: Optional[int] = None
    fluency: Optional[int] = None
    metric_values: dict[str, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.pair_id:
            raise CorpusError("EvaluationRecord.pair_id must be non-empty")
        for name, (lo, hi) in _ORDINAL_RANGES.items():
            v = getattr(self, name)
            if v is not None and not (lo <= v <= hi):
                raise CorpusError(
                    f"EvaluationRecord {self.pair_id!r}: {name}={v} outside [{lo}, {hi}]"
                )
        unknown = [k for k in self.metric_values if not is_registered(k)]
        if unknown:
            raise CorpusError(
                f"EvaluationRecord {self.pair_id!r}: unregistered metrics {unknown}"
            )


class EmbeddingKind(str, Enum):
    SENTENCE = "sentence"
    TOKEN_MATRIX = "token_matrix"


@dataclass(frozen=True)
class EmbeddingRecord:
    """Provider-tagged sentence vector or row-major token-embedding matrix."""

    item_id: str
    provider: str
    kind: EmbeddingKind
    values: tuple[float, ...]
    rows: int = 0  # token_matrix only
    cols: int = 0

    def __post_init__(self) -> None:
        if not self.item_id:
            raise CorpusError("EmbeddingRecord.item_id must be non-empty")
        if not self.provider:
            raise CorpusError(f"EmbeddingRecord {self.item_id!r}: provider must be non-empty")
        if any(not math.isfinite(v) for v in self.values):
            raise CorpusError(f"EmbeddingRecord {self.item_id!r}: non-finite value")
        if self.kind is EmbeddingKind.TOKEN_MATRIX:
            if self.rows <= 0 or self.cols <= 0:
                raise CorpusError(f"EmbeddingRecord {self.item_id!r}: matrix needs rows/cols > 0")
            if len(self.values) != self.rows * self.cols:
                raise CorpusError(
                    f"EmbeddingRecord {self.item_id!r}: expected {self.rows * self.cols} "
                    f"values, got {len(self.values)}"
                )
        else:
            if not self.values:
                raise CorpusError(f"EmbeddingRecord {self.item_id!r}: empty sentence vector")

    @property
    def dimension(self) -> int:
        return self.cols if self.kind is EmbeddingKind.TOKEN_MATRIX else len(self.values)

    def matrix(self) -> list[list[float]]:
        if self.kind is not EmbeddingKind.TOKEN_MATRIX:
            raise CorpusError(f"EmbeddingRecord {self.item_id!r} is not a token matrix")
        return [
            list(self.values[r * self.cols : (r + 1) * self.cols]) for r in range(self.rows)
        ]


@dataclass(frozen=True)
class ScoredPair:
    """A generated/reference summary pair (plus optional code) to be scored."""

    pair_id: str
    generated: str
    reference: str
    code: Optional[str] = None

    def __post_init__(self) -> None:
        if not self.pair_id:
            raise CorpusError("ScoredPair.pair_id must be non-empty")


# ---------------------------------------------------------------------------
# JSONL plumbing
# ---------------------------------------------------------------------------


def _iter_jsonl(path: str | Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                yield lineno, json.loads(raw)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: invalid JSON: {exc}") from exc


def _dump_line(obj: dict) -> str:
    # insertion order preserved -> fixed field order on disk
    return json.dumps(obj, ensure_ascii=False)


def load_corpus(path: str | Path) -> list[CodeUnit]:
    """Load a corpus.jsonl file, validating invariants and rejecting duplicate ids."""
    units: list[CodeUnit] = []
    seen: dict[str, int] = {}
    for lineno, obj in _iter_jsonl(path):
        try:
            comments = tuple(
                InnerComment(text=c["text"], covered_statements=int(c["covered_statements"]))
                for c in obj.get("inner_comments", [])
            )
            unit = CodeUnit(
                id=obj["id"],
                source_text=obj["source_text"],
                summary=obj.get("summary"),
                inner_comments=comments,
                statement_count=int(obj["statement_count"]),
            )
        except KeyError as exc:
            raise CorpusError(f"{path}:{lineno}: missing field {exc}") from exc
        except CorpusError as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from exc
        if unit.id in seen:
            raise CorpusError(
                f"{path}:{lineno}: duplicate id {unit.id!r} (first seen on line {seen[unit.id]})"
            )
        seen[unit.id] = lineno
        units.append(unit)
    return units


def write_corpus(units: Iterable[CodeUnit], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u in units:
            obj = {
                "id": u.id,
                "source_text": u.source_text,
                "summary": u.summary,
                "inner_comments": [
                    {"text": c.text, "covered_statements": c.covered_statements}
                    for c in u.inner_comments
                ],
                "statement_count": u.statement_count,
            }
            fh.write(_dump_line(obj) + "\n")


def load_triplets(path: str | Path) -> list[Triplet]:
    triplets: list[Triplet] = []
    for lineno, obj in _iter_jsonl(path):
        try:
            triplets.append(
                Triplet(
                    anchor_id=obj["anchor_id"],
                    positive=obj["positive"],
                    negative=obj["negative"],
                    negative_kind=NegativeKind(obj["negative_kind"]),
                )
            )
        except (KeyError, ValueError, CorpusError) as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from exc
    return triplets


def write_triplets(triplets: Sequence[Triplet], path: str | Path) -> None:
    """Write triplets.jsonl with fields in fixed order; round-trips exactly."""
    with open(path, "w", encoding="utf-8") as fh:
        for t in triplets:
            obj = {
                "anchor_id": t.anchor_id,
                "positive": t.positive,
                "negative": t.negative,
                "negative_kind": t.negative_kind.value,
            }
            fh.write(_dump_line(obj) + "\n")


def load_evaluations(path: str | Path) -> list[EvaluationRecord]:
    records: list[EvaluationRecord] = []
    for lineno, obj in _iter_jsonl(path):
        try:
            records.append(
                EvaluationRecord(
                    pair_id=obj["pair_id"],
                    da_score=obj.get("da_score"),
                    content_adequacy=obj.get("content_adequacy"),
                    conciseness=obj.get("conciseness"),
                    fluency=obj.get("fluency"),
                    metric_values={k: float(v) for k, v in obj.get("metric_values", {}).items()},
                )
            )
        except (KeyError, CorpusError) as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from exc
    return records


def write_evaluations(records: Iterable[EvaluationRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            obj = {
                "pair_id": r.pair_id,
                "da_score": r.da_score,
                "content_adequacy": r.content_adequacy,
                "conciseness": r.conciseness,
                "fluency": r.fluency,
                "metric_values": dict(sorted(r.metric_values.items())),
            }
            fh.write(_dump_line(obj) + "\n")


def load_embeddings(path: str | Path) -> list[EmbeddingRecord]:
    """Load embeddings.jsonl, enforcing constant per-provider dimension within the file."""
    records: list[EmbeddingRecord] = []
    dims: dict[str, int] = {}
    for lineno, obj in _iter_jsonl(path):
        try:
            kind = EmbeddingKind(obj["kind"])
            rec = EmbeddingRecord(
                item_id=obj["item_id"],
                provider=obj["provider"],
                kind=kind,
                values=tuple(float(v) for v in obj["values"]),
                rows=int(obj.get("rows", 0)),
                cols=int(obj.get("cols", 0)),
            )
        except (KeyError, ValueError, CorpusError) as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from exc
        prior = dims.setdefault(rec.provider, rec.dimension)
        if prior != rec.dimension:
            raise CorpusError(
                f"{path}:{lineno}: provider {rec.provider!r} dimension changed "
                f"from {prior} to {rec.dimension}"
            )
        records.append(rec)
    return records


def write_embeddings(records: Iterable[EmbeddingRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            obj = {"item_id": r.item_id, "provider": r.provider, "kind": r.kind.value}
            if r.kind is EmbeddingKind.TOKEN_MATRIX:
                obj["rows"] = r.rows
                obj["cols"] = r.cols
            obj["values"] = list(r.values)
            fh.write(_dump_line(obj) + "\n")


def load_pairs(path: str | Path) -> list[ScoredPair]:
    pairs: list[ScoredPair] = []
    seen: dict[str, int] = {}
    for lineno, obj in _iter_jsonl(path):
        try:
            pair = ScoredPair(
                pair_id=obj["pair_id"],
                generated=obj["generated"],
                reference=obj["reference"],
                code=obj.get("code"),
            )
        except (KeyError, CorpusError) as exc:
            raise CorpusError(f"{path}:{lineno}: {exc}") from exc
        if pair.pair_id in seen:
            raise CorpusError(
                f"{path}:{lineno}: duplicate pair_id {pair.pair_id!r} "
                f"(first seen on line {seen[pair.pair_id]})"
            )
        seen[pair.pair_id] = lineno
        pairs.append(pair)
    return pairs


def write_pairs(pairs: Iterable[ScoredPair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for p in pairs:
            obj = {"pair_id": p.pair_id, "generated": p.generated, "reference": p.reference}
            if p.code is not None:
                obj["code"] = p.code
            fh.write(_dump_line(obj) + "\n")


# ---------------------------------------------------------------------------
# Metric matrix CSV: header `pair_id,<metric1>,...`; empty cell = not computed.
# ---------------------------------------------------------------------------


def format_float(v: float) -> str:
    """Shortest round-trip decimal form; deterministic across runs."""
    return repr(float(v))


def write_metric_matrix(
    path: str | Path,
    columns: Sequence[str],
    rows: Iterable[tuple[str, dict[str, float]]],
) -> None:
    """Write `(pair_id, {metric: value})` rows under a fixed column order."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair_id", *columns])
        for pair_id, values in rows:
            writer.writerow(
                [pair_id]
                + [format_float(values[c]) if c in values else "" for c in columns]
            )


def load_metric_matrix(path: str | Path) -> tuple[list[str], list[tuple[str, dict[str, float]]]]:
    """Read a metric matrix CSV; returns (metric column names, rows)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusError(f"{path}: empty metric matrix") from None
        if not header or header[0] != "pair_id":
            raise CorpusError(f"{path}: first column must be pair_id, got {header[:1]}")
        columns = header[1:]
        rows: list[tuple[str, dict[str, float]]] = []
        for lineno, rec in enumerate(reader, start=2):
            if len(rec) != len(header):
                raise CorpusError(f"{path}:{lineno}: expected {len(header)} cells, got {len(rec)}")
            values: dict[str, float] = {}
            for name, cell in zip(columns, rec[1:]):
                if cell == "":
                    continue
                try:
                    values[name] = float(cell)
                except ValueError as exc:
                    raise CorpusError(f"{path}:{lineno}: bad value for {name}: {cell!r}") from exc
                if not math.isfinite(values[name]):
                    raise CorpusError(f"{path}:{lineno}: non-finite value for {name}")
            rows.append((rec[0], values))
    return columns, rows
