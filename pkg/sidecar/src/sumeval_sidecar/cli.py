"""Sidecar CLI: init, export, finetune.

Mirrors the scoring toolkit's conventions; all outputs use its interchange
formats. Exit codes: 0 ok, 1 usage, 2 data error, 3 training failure.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .encoder import EncoderConfig, load_encoder, new_encoder, save_encoder
from .records import FormatError, load_corpus_texts, load_items, load_triplets
from .training import TrainConfig, TrainingError, export_embeddings, finetune_triplets

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_TRAINING = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _cmd_init(args) -> int:
    items = load_items(args.corpus)
    encoder = new_encoder(
        [it.text for it in items],
        EncoderConfig(dim=args.dim, layers=args.layers),
        seed=args.seed,
    )
    save_encoder(encoder, args.out)
    print(f"initialized encoder (vocab {len(encoder.vocab)}, dim {args.dim}) -> {args.out}")
    return EXIT_OK


def _cmd_export(args) -> int:
    encoder = load_encoder(args.model)
    items = load_items(args.items)
    truncated = export_embeddings(encoder, items, args.provider, args.out)
    print(f"exported {len(items)} records ({truncated} truncated) -> {args.out}")
    return EXIT_OK


def _cmd_finetune(args) -> int:
    train = load_triplets(args.triplets)
    val = load_triplets(args.val_triplets)
    corpus = load_corpus_texts(args.corpus)
    cfg = TrainConfig(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        margin=args.margin,
        checkpoint_every=args.checkpoint_every,
        patience=args.patience,
        seed=args.seed,
        encoder_dim=args.dim,
    )
    encoder = load_encoder(args.model) if args.model else None
    result = finetune_triplets(train, val, corpus, args.out, cfg, encoder=encoder)
    print(
        f"trained {len(result.epoch_losses)} epochs; base score {result.base_score:.4f}, "
        f"best step {result.best.step} score {result.best.score:.4f} -> {result.run_dir}"
    )
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="sumeval-sidecar", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="build a fresh seeded encoder from a corpus of items")
    p.add_argument("--corpus", required=True, help="items JSONL {id, text, kind}")
    p.add_argument("--out", required=True, help="encoder checkpoint directory")
    p.add_argument("--dim", type=int, default=64)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_init)

    p = sub.add_parser("export", help="export EmbeddingRecord JSONL for items")
    p.add_argument("--model", required=True, help="encoder checkpoint directory")
    p.add_argument("--items", required=True, help="items JSONL {id, text, kind}")
    p.add_argument("--provider", required=True, help="provider tag for the records")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_export)

    p = sub.add_parser("finetune", help="triplet-loss fine-tuning with checkpoint eval")
    p.add_argument("--triplets", required=True, help="training triplets JSONL")
    p.add_argument("--val-triplets", required=True, help="validation triplets JSONL")
    p.add_argument("--corpus", required=True, help="corpus JSONL resolving anchor ids")
    p.add_argument("--out", required=True, help="run directory")
    p.add_argument("--model", help="start from an existing checkpoint instead of fresh")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=16)
    p.add_argument("--learning-rate", type=float, default=2e-5)
    p.add_argument("--margin", type=float, default=0.5)
    p.add_argument("--checkpoint-every", type=int, default=5000)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--dim", type=int, default=64)
    p.set_defaults(func=_cmd_finetune)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except TrainingError as exc:
        print(f"sumeval-sidecar: training failure: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    except (FormatError, FileNotFoundError, IsADirectoryError, KeyError) as exc:
        print(f"sumeval-sidecar: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
