"""Command-line entry point.

Subcommands: mine, score, side, checkpoint-score, analyze, pipeline.
Exit codes: 0 ok, 1 usage, 2 data error, 3 numerical failure.

Every produced artifact carries a manifest (input content hashes, resolved
config, seed) either embedded (report.json) or as a `<out>.manifest.json`
sidecar, and reruns on identical inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (
    CorpusError,
    format_float,
    load_embeddings,
    load_evaluations,
    load_metric_matrix,
    load_pairs,
    write_corpus,
    write_metric_matrix,
    write_triplets,
)
from .miner import (
    JavaSyntaxError,
    MinerConfig,
    MinerError,
    extract_from_files,
    mine_triplets,
)
from .ordlogit import ConvergenceError, ordered_logit_fit
from .report import (
    DEPENDENT_RANGES,
    PipelineConfig,
    build_analysis_matrix,
    dendrogram_json,
    dependent_vector,
    drop_constant_columns,
    dump_json,
    pca_json,
    polr_json,
    redun_json,
    render_dendrogram,
    render_pca_variance,
    run_pipeline,
    sha256_file,
)
from .scoring import (
    EmbeddingStore,
    ScoringConfig,
    ScoringError,
    expand_metric_selection,
    score_pairs,
)
from .side import checkpoint_score
from .stats import (
    AnalysisError,
    DataMatrix,
    minmax_rescale,
    pca,
    redun_select,
    spearman_matrix,
    varclus,
)
from .textnorm import SynonymTable

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3

logger = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _load_toml(path: str | Path) -> dict:
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _write_manifest(out_path: Path, payload: dict) -> None:
    manifest_path = out_path.with_name(out_path.name + ".manifest.json")
    dump_json({"tool": "sumeval", "version": __version__, **payload}, manifest_path)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_mine(args) -> int:
    corpus_dir = Path(args.corpus)
    if not corpus_dir.is_dir():
        raise CorpusError(f"{corpus_dir}: not a directory")
    files = sorted(corpus_dir.rglob("*.java"))
    if not files:
        raise CorpusError(f"{corpus_dir}: no .java files found")
    cfg = MinerConfig(coverage_threshold=args.coverage_threshold, rng_seed=args.seed)
    units = extract_from_files(files)
    if args.corpus_out:
        write_corpus(units, args.corpus_out)
    triplets = mine_triplets(units, cfg, hard_only=args.hard_only, random_only=args.random_only)
    out = Path(args.out)
    write_triplets(triplets, out)
    _write_manifest(
        out,
        {
            "seed": args.seed,
            "config": {
                "coverage_threshold": cfg.coverage_threshold,
                "satd_keywords": list(cfg.satd_keywords),
                "min_summary_tokens": cfg.min_summary_tokens,
                "max_summary_tokens": cfg.max_summary_tokens,
                "hard_only": args.hard_only,
                "random_only": args.random_only,
            },
            "inputs": {str(p.relative_to(corpus_dir)): sha256_file(p) for p in files},
            "n_units": len(units),
            "n_triplets": len(triplets),
        },
    )
    print(f"mined {len(triplets)} triplets from {len(units)} methods -> {out}")
    return EXIT_OK


def _cmd_score(args) -> int:
    pairs = load_pairs(args.pairs)
    store = EmbeddingStore()
    input_hashes = {str(args.pairs): sha256_file(args.pairs)}
    for emb_path in args.embeddings or []:
        store.add(load_embeddings(emb_path))
        input_hashes[str(emb_path)] = sha256_file(emb_path)

    config_values: dict = {}
    if args.config:
        config_values = _load_toml(args.config).get("score", {})
        input_hashes[str(args.config)] = sha256_file(args.config)
    metrics_spec = args.metrics or config_values.get("metrics", "all")
    synonyms = None
    synonyms_path = args.synonyms or config_values.get("synonyms")
    if synonyms_path:
        synonyms = SynonymTable.load(synonyms_path)
        input_hashes[str(synonyms_path)] = sha256_file(synonyms_path)
    cfg = ScoringConfig(
        metrics=expand_metric_selection(metrics_spec),
        brevity_penalty=not args.no_brevity_penalty
        and config_values.get("brevity_penalty", True),
        rouge_w_weight=float(config_values.get("rouge_w_weight", 1.2)),
        chrf_max_n=int(config_values.get("chrf_max_n", 6)),
        chrf_beta=float(config_values.get("chrf_beta", 2.0)),
        normalize_embeddings=args.normalize or config_values.get("normalize_embeddings", False),
        synonyms=synonyms,
        strict=args.strict,
    )
    result = score_pairs(pairs, store, cfg)
    out = Path(args.out)
    write_metric_matrix(out, result.columns, result.rows)
    _write_manifest(
        out,
        {
            "config": {
                "metrics": list(result.columns),
                "brevity_penalty": cfg.brevity_penalty,
                "rouge_w_weight": cfg.rouge_w_weight,
                "chrf_max_n": cfg.chrf_max_n,
                "chrf_beta": cfg.chrf_beta,
                "normalize_embeddings": cfg.normalize_embeddings,
            },
            "inputs": input_hashes,
            "n_pairs": len(result.rows),
            "skipped_metrics": result.skipped,
            "partial_metrics": result.partial,
        },
    )
    for metric, reason in sorted(result.skipped.items()):
        logger.warning("metric %s skipped: %s", metric, reason)
    print(f"scored {len(result.rows)} pairs across {len(result.columns)} metrics -> {out}")
    return EXIT_OK


def _cmd_side(args) -> int:
    pairs = load_pairs(args.pairs)
    store = EmbeddingStore(load_embeddings(args.embeddings))
    cfg = ScoringConfig(metrics=("SIDE",), strict=True)
    result = score_pairs(pairs, store, cfg)
    out = Path(args.out)
    write_metric_matrix(out, ("SIDE",), result.rows)
    _write_manifest(
        out,
        {
            "inputs": {
                str(args.pairs): sha256_file(args.pairs),
                str(args.embeddings): sha256_file(args.embeddings),
            },
            "n_pairs": len(result.rows),
        },
    )
    print(f"side-scored {len(result.rows)} pairs -> {out}")
    return EXIT_OK


def _read_similarity_csv(path: str | Path) -> list[float]:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "cosine" not in reader.fieldnames:
            raise CorpusError(f"{path}: expected a CSV with a 'cosine' column")
        try:
            return [float(row["cosine"]) for row in reader]
        except (TypeError, ValueError) as exc:
            raise CorpusError(f"{path}: bad cosine value: {exc}") from exc


def _cmd_checkpoint_score(args) -> int:
    pos = _read_similarity_csv(args.pos)
    neg = _read_similarity_csv(args.neg)
    try:
        score = checkpoint_score(pos, neg, halved=args.halved)
    except ValueError as exc:
        raise CorpusError(str(exc)) from exc
    print(format_float(score))
    return EXIT_OK


def _analysis_inputs(args):
    columns, rows = load_metric_matrix(args.matrix)
    input_hashes = {str(args.matrix): sha256_file(args.matrix)}
    evals = None
    if args.evals:
        evals = load_evaluations(args.evals)
        input_hashes[str(args.evals)] = sha256_file(args.evals)
    data, kept_evals = build_analysis_matrix(columns, rows, evals)
    return data, kept_evals, input_hashes


def _cmd_analyze(args) -> int:
    data, kept_evals, input_hashes = _analysis_inputs(args)
    out = Path(args.out)
    body: dict
    if args.mode == "corr":
        rho = spearman_matrix(data)
        body = {"labels": list(data.column_names), "spearman": rho.tolist()}
    elif args.mode == "varclus":
        tree = varclus(data, method=args.linkage)
        body = dendrogram_json(tree)
        if args.figures:
            render_dendrogram(tree, out.with_suffix(".png"))
    elif args.mode == "redun":
        body = redun_json(redun_select(data, args.r2_threshold), args.r2_threshold)
    elif args.mode == "pca":
        result = pca(minmax_rescale(data, 0.0, 1.0))
        body = pca_json(result)
        if args.figures:
            render_pca_variance(result, out.with_suffix(".png"))
    elif args.mode == "polr":
        if not args.evals:
            raise CorpusError("analyze polr requires --evals")
        dependents = (
            tuple(DEPENDENT_RANGES) if args.dependent == "all" else (args.dependent,)
        )
        models = {}
        for dep in dependents:
            lo, hi = DEPENDENT_RANGES[dep]
            y = dependent_vector(kept_evals, dep)
            mask = ~np.isnan(y)
            rated = drop_constant_columns(
                DataMatrix(data.column_names, data.rows[mask])
            )
            models[dep] = polr_json(ordered_logit_fit(minmax_rescale(rated, lo, hi), y[mask]))
        body = {"models": models}
    else:  # pragma: no cover - argparse restricts choices
        raise AnalysisError(f"unknown analyze mode {args.mode!r}")
    report = {
        "manifest": {
            "tool": "sumeval",
            "version": __version__,
            "mode": args.mode,
            "inputs": dict(sorted(input_hashes.items())),
        },
        args.mode: body,
    }
    dump_json(report, out)
    print(f"wrote {args.mode} report -> {out}")
    return EXIT_OK


def _cmd_pipeline(args) -> int:
    raw = _load_toml(args.config).get("pipeline", {})
    cfg = PipelineConfig(
        matrix=args.matrix or raw.get("matrix"),
        evals=args.evals or raw.get("evals"),
        out_dir=args.out or raw.get("out_dir", "report"),
        seed=args.seed if args.seed is not None else int(raw.get("seed", 0)),
        r2_threshold=(
            args.r2_threshold
            if args.r2_threshold is not None
            else float(raw.get("r2_threshold", 0.8))
        ),
        linkage=args.linkage or raw.get("linkage", "average"),
        figures=raw.get("figures", True) if args.figures is None else args.figures,
        dependents=tuple(raw.get("dependents", tuple(DEPENDENT_RANGES))),
        config_digest=sha256_file(args.config),
    )
    if not cfg.matrix or not cfg.evals:
        raise CorpusError("pipeline requires matrix and evals paths (config or flags)")
    columns, rows = load_metric_matrix(cfg.matrix)
    evals = load_evaluations(cfg.evals)
    input_hashes = {
        str(cfg.matrix): sha256_file(cfg.matrix),
        str(cfg.evals): sha256_file(cfg.evals),
        str(args.config): cfg.config_digest,
    }
    report = run_pipeline(cfg, columns, rows, evals, input_hashes)
    n_models = sum(1 for m in report["models"].values() if "table" in m)
    print(
        f"pipeline done: {report['n_evaluations']} evaluations, "
        f"{len(report['redun']['kept'])} selected metrics, {n_models} models -> {cfg.out_dir}"
    )
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> _Parser:
    parser = _Parser(prog="sumeval", description=__doc__)
    parser.add_argument("--version", action="version", version=f"sumeval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", help="mine contrastive triplets from a Java corpus")
    p.add_argument("--corpus", required=True, help="directory of .java files")
    p.add_argument("--out", required=True, help="output triplets.jsonl")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--coverage-threshold", type=float, default=0.25)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--hard-only", action="store_true")
    group.add_argument("--random-only", action="store_true")
    p.add_argument("--corpus-out", help="also write the extracted corpus.jsonl")
    p.set_defaults(func=_cmd_mine)

    p = sub.add_parser("score", help="score pairs with the metric suite")
    p.add_argument("--pairs", required=True)
    p.add_argument("--out", required=True, help="output metric matrix CSV")
    p.add_argument("--embeddings", action="append", help="EmbeddingRecord JSONL (repeatable)")
    p.add_argument("--config", help="TOML config with a [score] section")
    p.add_argument("--metrics", help="all | overlap | vector | comma-separated names")
    p.add_argument("--synonyms", help="synonym table JSONL for METEOR")
    p.add_argument("--strict", action="store_true", help="fail instead of leaving empty cells")
    p.add_argument("--no-brevity-penalty", action="store_true")
    p.add_argument("--normalize", action="store_true", help="L2-normalize before Euclidean")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("side", help="compute SIDE scores from side-encoder embeddings")
    p.add_argument("--pairs", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_side)

    p = sub.add_parser("checkpoint-score", help="mean positive-negative similarity gap")
    p.add_argument("--pos", required=True, help="CSV with a cosine column")
    p.add_argument("--neg", required=True, help="CSV with a cosine column")
    p.add_argument("--halved", action="store_true", help="report score/2 (1.0-max convention)")
    p.set_defaults(func=_cmd_checkpoint_score)

    p = sub.add_parser("analyze", help="run one analysis step")
    p.add_argument("mode", choices=["corr", "varclus", "redun", "pca", "polr"])
    p.add_argument("--matrix", required=True)
    p.add_argument("--evals")
    p.add_argument("--out", required=True)
    p.add_argument("--r2-threshold", type=float, default=0.8)
    p.add_argument("--linkage", choices=["single", "complete", "average"], default="average")
    p.add_argument("--dependent", choices=[*DEPENDENT_RANGES, "all"], default="all")
    p.add_argument("--figures", action="store_true", help="render figures next to the report")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("pipeline", help="redun -> rescale -> varclus/pca/polr -> report")
    p.add_argument("--config", required=True, help="TOML config with a [pipeline] section")
    p.add_argument("--matrix")
    p.add_argument("--evals")
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--r2-threshold", type=float)
    p.add_argument("--linkage", choices=["single", "complete", "average"])
    fig = p.add_mutually_exclusive_group()
    fig.add_argument("--figures", dest="figures", action="store_true", default=None)
    fig.add_argument("--no-figures", dest="figures", action="store_false")
    p.set_defaults(func=_cmd_pipeline)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"sumeval: numerical failure: {exc}", file=sys.stderr)
        if exc.diagnostics:
            print(f"sumeval: diagnostics: {exc.diagnostics}", file=sys.stderr)
        return EXIT_NUMERIC
    except np.linalg.LinAlgError as exc:
        print(f"sumeval: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (
        CorpusError,
        MinerError,
        JavaSyntaxError,
        ScoringError,
        AnalysisError,
        FileNotFoundError,
        IsADirectoryError,
        KeyError,
    ) as exc:
        print(f"sumeval: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
