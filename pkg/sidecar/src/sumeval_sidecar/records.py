"""Readers/writers for the toolkit's line-oriented interchange formats.

The sidecar talks to the scoring toolkit only through its documented file
formats (embeddings.jsonl, triplets.jsonl, corpus.jsonl, similarity CSVs),
so the schemas are implemented here against that contract rather than
imported.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from typing import Iterable


class FormatError(Exception):
    pass


def _iter_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            raw = raw.strip()
            if not raw:
                continue
            try:
                yield lineno, json.loads(raw)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{path}:{lineno}: invalid JSON: {exc}") from exc


@dataclass(frozen=True)
class Item:
    """One text to embed: (id, text, kind) with kind sentence|token_matrix."""

    id: str
    text: str
    kind: str = "sentence"


def load_items(path) -> list[Item]:
    items = []
    for lineno, obj in _iter_jsonl(path):
        try:
            kind = obj.get("kind", "sentence")
            if kind not in ("sentence", "token_matrix"):
                raise FormatError(f"bad kind {kind!r}")
            items.append(Item(id=obj["id"], text=obj["text"], kind=kind))
        except KeyError as exc:
            raise FormatError(f"{path}:{lineno}: missing field {exc}") from exc
    return items


@dataclass(frozen=True)
class TripletText:
    anchor_id: str
    positive: str
    negative: str


def load_triplets(path) -> list[TripletText]:
    triplets = []
    for lineno, obj in _iter_jsonl(path):
        try:
            triplets.append(
                TripletText(obj["anchor_id"], obj["positive"], obj["negative"])
            )
        except KeyError as exc:
            raise FormatError(f"{path}:{lineno}: missing field {exc}") from exc
    return triplets


def load_corpus_texts(path) -> dict[str, str]:
    """anchor_id -> method source text from a corpus.jsonl file."""
    texts = {}
    for lineno, obj in _iter_jsonl(path):
        try:
            texts[obj["id"]] = obj["source_text"]
        except KeyError as exc:
            raise FormatError(f"{path}:{lineno}: missing field {exc}") from exc
    return texts


def write_sentence_record(fh, item_id: str, provider: str, values) -> None:
    fh.write(
        json.dumps(
            {
                "item_id": item_id,
                "provider": provider,
                "kind": "sentence",
                "values": [float(v) for v in values],
            }
        )
        + "\n"
    )


def write_matrix_record(fh, item_id: str, provider: str, rows) -> None:
    n_rows = len(rows)
    n_cols = len(rows[0]) if n_rows else 0
    flat = [float(v) for row in rows for v in row]
    fh.write(
        json.dumps(
            {
                "item_id": item_id,
                "provider": provider,
                "kind": "token_matrix",
                "rows": n_rows,
                "cols": n_cols,
                "values": flat,
            }
        )
        + "\n"
    )


def write_similarity_csv(path, item_ids: Iterable[str], values: Iterable[float]) -> None:
    """The pos/neg cosine CSVs the toolkit's checkpoint-score command reads."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["item_id", "cosine"])
        for item_id, value in zip(item_ids, values):
            writer.writerow([item_id, repr(float(value))])
