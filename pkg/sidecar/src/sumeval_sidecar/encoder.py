"""A small deterministic transformer sentence encoder.

Pre-trained weights are not downloadable in this environment, so the sidecar
ships its own encoder: word-level vocabulary built from a corpus, learned
token + position embeddings, a couple of transformer layers, and masked mean
pooling. It preserves the shape of the production setup (512-token window,
mean-pooled sentence vectors, per-token matrices for BERTScore-style
consumers); swapping in real pre-trained weights means implementing this
same interface around them.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, asdict
from pathlib import Path

import torch
from torch import nn

MAX_SEQUENCE_LENGTH = 512
PAD, UNK = 0, 1

_TOKEN_RE = re.compile(r"[A-Za-z0-9]+")


def tokenize(text: str) -> list[str]:
    return [t.lower() for t in _TOKEN_RE.findall(text)]


def build_vocabulary(texts, max_size: int = 30000) -> dict[str, int]:
    counts: dict[str, int] = {}
    for text in texts:
        for tok in tokenize(text):
            counts[tok] = counts.get(tok, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[: max_size - 2]
    vocab = {"<pad>": PAD, "<unk>": UNK}
    for tok, _ in ranked:
        vocab[tok] = len(vocab)
    return vocab


@dataclass(frozen=True)
class EncoderConfig:
    dim: int = 64
    heads: int = 4
    layers: int = 2
    feedforward: int = 128
    max_length: int = MAX_SEQUENCE_LENGTH


class Encoder(nn.Module):
    def __init__(self, vocab: dict[str, int], config: EncoderConfig):
        super().__init__()
        self.vocab = vocab
        self.config = config
        self.token_embedding = nn.Embedding(len(vocab), config.dim, padding_idx=PAD)
        self.position_embedding = nn.Embedding(config.max_length, config.dim)
        layer = nn.TransformerEncoderLayer(
            d_model=config.dim,
            nhead=config.heads,
            dim_feedforward=config.feedforward,
            batch_first=True,
            dropout=0.0,  # deterministic inference and training
        )
        # nested-tensor fast path disabled: keeps CPU runs deterministic
        self.transformer = nn.TransformerEncoder(
            layer, num_layers=config.layers, enable_nested_tensor=False
        )

    def encode_ids(self, text: str) -> tuple[list[int], bool]:
        """Token ids plus a flag for truncation at the 512-token window."""
        tokens = tokenize(text)
        truncated = len(tokens) > self.config.max_length
        ids = [self.vocab.get(t, UNK) for t in tokens[: self.config.max_length]]
        return ids or [UNK], truncated

    def _contextualize(self, batch_ids: list[list[int]]) -> tuple[torch.Tensor, torch.Tensor]:
        width = max(len(ids) for ids in batch_ids)
        padded = torch.full((len(batch_ids), width), PAD, dtype=torch.long)
        for i, ids in enumerate(batch_ids):
            padded[i, : len(ids)] = torch.tensor(ids, dtype=torch.long)
        mask = padded == PAD
        positions = torch.arange(width).unsqueeze(0)
        hidden = self.token_embedding(padded) + self.position_embedding(positions)
        hidden = self.transformer(hidden, src_key_padding_mask=mask)
        return hidden, ~mask

    def forward(self, batch_ids: list[list[int]]) -> torch.Tensor:
        """Mean-pooled sentence vectors, shape (batch, dim)."""
        hidden, keep = self._contextualize(batch_ids)
        keep_f = keep.unsqueeze(-1).float()
        summed = (hidden * keep_f).sum(dim=1)
        return summed / keep_f.sum(dim=1).clamp(min=1.0)

    @torch.no_grad()
    def embed_sentences(self, texts: list[str], batch_size: int = 32):
        """(vectors, truncation flags) for a list of texts, eval mode."""
        self.eval()
        vectors = []
        flags = []
        for start in range(0, len(texts), batch_size):
            chunk = texts[start : start + batch_size]
            ids_flags = [self.encode_ids(t) for t in chunk]
            flags.extend(f for _, f in ids_flags)
            vectors.append(self([ids for ids, _ in ids_flags]))
        if not vectors:
            return torch.empty(0, self.config.dim), []
        return torch.cat(vectors), flags

    @torch.no_grad()
    def embed_tokens(self, text: str) -> tuple[torch.Tensor, bool]:
        """Per-token contextual embeddings, shape (n_tokens, dim)."""
        self.eval()
        ids, truncated = self.encode_ids(text)
        hidden, _ = self._contextualize([ids])
        return hidden[0, : len(ids)], truncated


def save_encoder(encoder: Encoder, path: str | Path) -> None:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    torch.save(encoder.state_dict(), path / "weights.pt")
    with open(path / "encoder.json", "w", encoding="utf-8") as fh:
        json.dump({"config": asdict(encoder.config), "vocab": encoder.vocab}, fh)


def load_encoder(path: str | Path) -> Encoder:
    path = Path(path)
    meta_file = path / "encoder.json"
    weights_file = path / "weights.pt"
    if not meta_file.exists() or not weights_file.exists():
        raise FileNotFoundError(f"{path}: not an encoder checkpoint directory")
    with open(meta_file, encoding="utf-8") as fh:
        meta = json.load(fh)
    encoder = Encoder(meta["vocab"], EncoderConfig(**meta["config"]))
    encoder.load_state_dict(torch.load(weights_file, weights_only=True))
    encoder.eval()
    return encoder


def new_encoder(texts, config: EncoderConfig = EncoderConfig(), seed: int = 0) -> Encoder:
    """Seeded fresh encoder with a vocabulary built from the given texts."""
    torch.manual_seed(seed)
    return Encoder(build_vocabulary(texts), config)
