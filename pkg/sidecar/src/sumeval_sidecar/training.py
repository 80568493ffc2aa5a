"""Embedding export and contrastive triplet fine-tuning.

Training follows the sentence-encoder recipe: triplet margin loss on cosine
distance (anchor pulled toward the positive, pushed from the negative),
AdamW with the learning rate warmed up from 0 over the first 10% of total
steps (computed from dataset size, batch size, and epochs) then decayed
linearly, checkpoints on a fixed step cadence, and early stopping with a
patience of 5 validation evaluations. Desk-scale configs shrink step counts
and the encoder, not the semantics.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import torch
from torch import nn

from .encoder import Encoder, EncoderConfig, new_encoder, save_encoder
from .records import (
    Item,
    TripletText,
    write_matrix_record,
    write_sentence_record,
    write_similarity_csv,
)

logger = logging.getLogger(__name__)


class TrainingError(Exception):
    pass


# ---------------------------------------------------------------------------
# Export
# ---------------------------------------------------------------------------


def export_embeddings(
    encoder: Encoder, items: Sequence[Item], provider: str, out_path
) -> int:
    """Write one EmbeddingRecord per item; returns the truncation count."""
    truncation_count = 0
    sentence_items = [it for it in items if it.kind == "sentence"]
    vectors, flags = encoder.embed_sentences([it.text for it in sentence_items])
    by_id = {it.id: vectors[i] for i, it in enumerate(sentence_items)}
    truncation_count += sum(flags)
    with open(out_path, "w", encoding="utf-8") as fh:
        for item in items:
            if item.kind == "sentence":
                write_sentence_record(fh, item.id, provider, by_id[item.id].tolist())
            else:
                matrix, truncated = encoder.embed_tokens(item.text)
                truncation_count += truncated
                write_matrix_record(fh, item.id, provider, matrix.tolist())
    if truncation_count:
        logger.warning("%d items exceeded the %d-token window and were truncated",
                       truncation_count, encoder.config.max_length)
    return truncation_count


# ---------------------------------------------------------------------------
# Fine-tuning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 16
    learning_rate: float = 2e-5
    margin: float = 0.5
    warmup_fraction: float = 0.1
    checkpoint_every: int = 5000
    patience: int = 5
    seed: int = 0
    encoder_dim: int = 64
    encoder_layers: int = 2


def cosine_distance(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    return 1.0 - nn.functional.cosine_similarity(a, b, dim=-1)


def triplet_margin_loss(anchor, positive, negative, margin: float) -> torch.Tensor:
    return torch.relu(
        cosine_distance(anchor, positive) - cosine_distance(anchor, negative) + margin
    ).mean()


def _lr_at(step: int, total_steps: int, peak: float, warmup_fraction: float) -> float:
    warmup = max(1, math.ceil(total_steps * warmup_fraction))
    if step < warmup:
        return peak * (step + 1) / warmup
    remaining = max(1, total_steps - warmup)
    return peak * max(0.0, (total_steps - step) / remaining)


@dataclass
class CheckpointRecord:
    step: int
    path: str
    score: float  # mean positive-minus-negative validation similarity


@dataclass
class TrainResult:
    run_dir: str
    epoch_losses: list[float]
    checkpoints: list[CheckpointRecord]
    base_score: float
    best: CheckpointRecord
    stopped_early: bool


def _resolve_texts(
    triplets: Sequence[TripletText], corpus_texts: dict[str, str]
) -> list[tuple[str, str, str]]:
    resolved = []
    missing = set()
    for t in triplets:
        anchor = corpus_texts.get(t.anchor_id)
        if anchor is None:
            missing.add(t.anchor_id)
            continue
        resolved.append((anchor, t.positive, t.negative))
    if missing:
        raise TrainingError(
            f"{len(missing)} anchor ids missing from the corpus, e.g. {sorted(missing)[:5]}"
        )
    return resolved


@torch.no_grad()
def _validation_similarities(
    encoder: Encoder, triplets: Sequence[tuple[str, str, str]], batch_size: int
) -> tuple[list[float], list[float]]:
    encoder.eval()
    pos_sims: list[float] = []
    neg_sims: list[float] = []
    for start in range(0, len(triplets), batch_size):
        chunk = triplets[start : start + batch_size]
        anchors, _ = encoder.embed_sentences([c[0] for c in chunk], batch_size)
        positives, _ = encoder.embed_sentences([c[1] for c in chunk], batch_size)
        negatives, _ = encoder.embed_sentences([c[2] for c in chunk], batch_size)
        pos_sims.extend(nn.functional.cosine_similarity(anchors, positives).tolist())
        neg_sims.extend(nn.functional.cosine_similarity(anchors, negatives).tolist())
    return pos_sims, neg_sims


def _evaluate_checkpoint(
    encoder: Encoder,
    val_triplets,
    step: int,
    run_dir: Path,
    batch_size: int,
) -> CheckpointRecord:
    pos, neg = _validation_similarities(encoder, val_triplets, batch_size)
    eval_dir = run_dir / "eval"
    eval_dir.mkdir(parents=True, exist_ok=True)
    ids = [f"v{i}" for i in range(len(pos))]
    write_similarity_csv(eval_dir / f"pos_step-{step}.csv", ids, pos)
    write_similarity_csv(eval_dir / f"neg_step-{step}.csv", ids, neg)
    checkpoint_dir = run_dir / "checkpoints" / f"step-{step}"
    save_encoder(encoder, checkpoint_dir)
    score = sum(p - n for p, n in zip(pos, neg)) / len(pos)
    return CheckpointRecord(step=step, path=str(checkpoint_dir), score=score)


def finetune_triplets(
    train_triplets: Sequence[TripletText],
    val_triplets: Sequence[TripletText],
    corpus_texts: dict[str, str],
    run_dir,
    cfg: TrainConfig = TrainConfig(),
    encoder: Optional[Encoder] = None,
) -> TrainResult:
    """Train with triplet margin loss; emit checkpoints plus per-checkpoint
    validation similarity CSVs for external checkpoint selection."""
    if not train_triplets:
        raise TrainingError("empty triplet file")
    if not val_triplets:
        raise TrainingError("empty validation set")
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)

    train = _resolve_texts(train_triplets, corpus_texts)
    val = _resolve_texts(val_triplets, corpus_texts)

    torch.manual_seed(cfg.seed)
    if encoder is None:
        texts = [t for triple in train for t in triple]
        encoder = new_encoder(
            texts,
            EncoderConfig(dim=cfg.encoder_dim, layers=cfg.encoder_layers),
            seed=cfg.seed,
        )

    steps_per_epoch = math.ceil(len(train) / cfg.batch_size)
    total_steps = steps_per_epoch * cfg.epochs
    optimizer = torch.optim.AdamW(encoder.parameters(), lr=cfg.learning_rate)

    base = _evaluate_checkpoint(encoder, val, 0, run_dir, cfg.batch_size)
    checkpoints = [base]
    best = base
    evals_since_best = 0
    stopped_early = False

    generator = torch.Generator().manual_seed(cfg.seed)
    epoch_losses: list[float] = []
    step = 0
    log_path = run_dir / "log.jsonl"
    with open(log_path, "w", encoding="utf-8") as log:
        for epoch in range(cfg.epochs):
            if stopped_early:
                break
            encoder.train()
            order = torch.randperm(len(train), generator=generator).tolist()
            losses = []
            for start in range(0, len(train), cfg.batch_size):
                batch = [train[i] for i in order[start : start + cfg.batch_size]]
                for group in optimizer.param_groups:
                    group["lr"] = _lr_at(
                        step, total_steps, cfg.learning_rate, cfg.warmup_fraction
                    )
                anchor_ids = [encoder.encode_ids(a)[0] for a, _, _ in batch]
                pos_ids = [encoder.encode_ids(p)[0] for _, p, _ in batch]
                neg_ids = [encoder.encode_ids(n)[0] for _, _, n in batch]
                optimizer.zero_grad()
                loss = triplet_margin_loss(
                    encoder(anchor_ids), encoder(pos_ids), encoder(neg_ids), cfg.margin
                )
                if not torch.isfinite(loss):
                    raise TrainingError(
                        f"non-finite loss at step {step} (epoch {epoch}): {loss.item()}"
                    )
                loss.backward()
                optimizer.step()
                losses.append(loss.item())
                step += 1
                if step % cfg.checkpoint_every == 0:
                    record = _evaluate_checkpoint(encoder, val, step, run_dir, cfg.batch_size)
                    encoder.train()  # evaluation flips to eval mode
                    checkpoints.append(record)
                    if record.score > best.score:
                        best = record
                        evals_since_best = 0
                    else:
                        evals_since_best += 1
                        if evals_since_best >= cfg.patience:
                            stopped_early = True
                            break
            epoch_mean = sum(losses) / len(losses)
            epoch_losses.append(epoch_mean)
            log.write(json.dumps({"epoch": epoch, "mean_loss": epoch_mean}) + "\n")

    if checkpoints[-1].step != step and not stopped_early:
        record = _evaluate_checkpoint(encoder, val, step, run_dir, cfg.batch_size)
        checkpoints.append(record)
        if record.score > best.score:
            best = record

    summary = {
        "base_score": base.score,
        "best_step": best.step,
        "best_score": best.score,
        "stopped_early": stopped_early,
        "epoch_losses": epoch_losses,
        "checkpoints": [
            {"step": c.step, "path": c.path, "score": c.score} for c in checkpoints
        ],
        "config": {
            "epochs": cfg.epochs,
            "batch_size": cfg.batch_size,
            "learning_rate": cfg.learning_rate,
            "margin": cfg.margin,
            "warmup_fraction": cfg.warmup_fraction,
            "checkpoint_every": cfg.checkpoint_every,
            "patience": cfg.patience,
            "seed": cfg.seed,
        },
    }
    with open(run_dir / "summary.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return TrainResult(
        run_dir=str(run_dir),
        epoch_losses=epoch_losses,
        checkpoints=checkpoints,
        base_score=base.score,
        best=best,
        stopped_early=stopped_early,
    )
