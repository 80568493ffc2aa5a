"""Analysis report bundle: JSON tables, intermediate CSVs, and figures.

The pipeline runs variable selection, rescaling, clustering, PCA, and one
ordered-logit model per dependent variable, then writes everything under a
report directory. Outputs are byte-identical across reruns on identical
inputs: JSON is dumped with sorted keys, floats use their shortest
round-trip form, and figures are rendered without embedded metadata.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from scipy.cluster.hierarchy import dendrogram as scipy_dendrogram

from . import __version__
from .corpus import CorpusError, EvaluationRecord, write_metric_matrix
from .ordlogit import OrderedLogitFit, ordered_logit_fit
from .stats import (
    DataMatrix,
    Dendrogram,
    PcaResult,
    RedunResult,
    minmax_rescale,
    pca,
    redun_select,
    varclus,
)

logger = logging.getLogger(__name__)

DEPENDENT_RANGES = {
    "da_score": (0.0, 100.0),
    "content_adequacy": (0.0, 5.0),
    "conciseness": (0.0, 5.0),
    "fluency": (0.0, 5.0),
}


@dataclass(frozen=True)
class PipelineConfig:
    matrix: str
    evals: str
    out_dir: str
    seed: int = 0
    r2_threshold: float = 0.8
    linkage: str = "average"
    figures: bool = True
    dependents: tuple[str, ...] = tuple(DEPENDENT_RANGES)
    config_digest: str = ""


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return f"sha256:{digest.hexdigest()}"


def build_analysis_matrix(
    columns: Sequence[str],
    matrix_rows: Sequence[tuple[str, dict[str, float]]],
    evals: Optional[Sequence[EvaluationRecord]] = None,
) -> tuple[DataMatrix, list[EvaluationRecord]]:
    """Assemble the X matrix, one row per evaluation (or per pair without evals).

    Every evaluation's pair_id must exist in the matrix. Columns with no
    values are dropped with a warning; remaining rows missing any value are
    dropped with a warning.
    """
    by_id = {pid: vals for pid, vals in matrix_rows}
    if evals is not None:
        missing = sorted({r.pair_id for r in evals if r.pair_id not in by_id})
        if missing:
            shown = ", ".join(missing[:20])
            raise CorpusError(
                f"{len(missing)} evaluation pair_ids missing from the metric matrix: {shown}"
            )
        id_sequence = [r.pair_id for r in evals]
        kept_evals = list(evals)
    else:
        id_sequence = [pid for pid, _ in matrix_rows]
        kept_evals = []

    present = [c for c in columns if any(c in by_id[pid] for pid in id_sequence)]
    dropped_cols = [c for c in columns if c not in present]
    if dropped_cols:
        logger.warning("dropping empty metric columns: %s", ", ".join(dropped_cols))

    rows = []
    keep_mask = []
    for pid in id_sequence:
        vals = by_id[pid]
        if all(c in vals for c in present):
            rows.append([vals[c] for c in present])
            keep_mask.append(True)
        else:
            keep_mask.append(False)
    n_dropped = keep_mask.count(False)
    if n_dropped:
        logger.warning("dropped %d rows with missing metric values", n_dropped)
    if evals is not None:
        kept_evals = [r for r, keep in zip(kept_evals, keep_mask) if keep]
    if not rows:
        raise CorpusError("no complete rows available for analysis")
    return DataMatrix(tuple(present), np.asarray(rows, dtype=float)), kept_evals


def dependent_vector(evals: Sequence[EvaluationRecord], name: str) -> np.ndarray:
    if name not in DEPENDENT_RANGES:
        raise CorpusError(f"unknown dependent variable {name!r}")
    return np.asarray(
        [float(getattr(r, name)) if getattr(r, name) is not None else np.nan for r in evals]
    )


def drop_constant_columns(data: DataMatrix) -> DataMatrix:
    """Remove zero-information columns; they make ordered-logit fits singular."""
    keep = [
        n for j, n in enumerate(data.column_names)
        if data.rows[:, j].min() < data.rows[:, j].max()
    ]
    dropped = [n for n in data.column_names if n not in keep]
    if dropped:
        logger.warning("dropping constant columns before model fit: %s", ", ".join(dropped))
    if not keep:
        raise CorpusError("all columns are constant; nothing to fit")
    return data.select(keep)


# ---------------------------------------------------------------------------
# JSON views
# ---------------------------------------------------------------------------


def dendrogram_json(tree: Dendrogram) -> dict:
    return {
        "labels": list(tree.labels),
        "merges": [
            {"left": a, "right": b, "height": h, "size": s} for a, b, h, s in tree.merges
        ],
    }


def pca_json(result: PcaResult) -> dict:
    return {
        "prop_variance": result.prop_variance.tolist(),
        "cumulative": result.cumulative.tolist(),
        "eigenvectors": {
            name: result.eigenvectors[i, :].tolist()
            for i, name in enumerate(result.column_names)
        },
    }


def redun_json(result: RedunResult, threshold: float) -> dict:
    return {
        "threshold": threshold,
        "kept": list(result.kept),
        "removed": [{"name": n, "adjusted_r2": r2} for n, r2 in result.removed],
    }


def polr_json(fit: OrderedLogitFit) -> dict:
    table = []
    for i, name in enumerate(fit.variable_names):
        table.append(
            {
                "metric": name,
                "or": float(fit.odds_ratios[i]),
                "value": float(fit.coefficients[i]),
                "std_error": float(fit.std_errors[i]),
                "t_value": float(fit.t_values[i]),
                "p_value": float(fit.p_values_raw[i]),
                "p_value_bh": float(fit.p_values_bh[i]),
            }
        )
    return {
        "table": table,
        "intercepts": fit.intercepts.tolist(),
        "levels": list(fit.levels),
        "log_likelihood": fit.log_likelihood,
        "aic": fit.aic,
        "n_obs": fit.n_obs,
        "n_iterations": fit.n_iterations,
    }


def dump_json(obj: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Figures
# ---------------------------------------------------------------------------

_SAVEFIG_KWARGS = {"dpi": 150, "metadata": {"Software": None}}


def render_dendrogram(tree: Dendrogram, path: str | Path) -> None:
    """Horizontal dendrogram with the axis expressed as Spearman rho^2."""
    z = np.asarray([[a, b, h, s] for a, b, h, s in tree.merges], dtype=float)
    fig, ax = plt.subplots(figsize=(8, max(3, 0.3 * len(tree.labels))))
    scipy_dendrogram(z, labels=list(tree.labels), orientation="left", ax=ax)
    ax.set_xlabel("Spearman $\\rho^2$")
    ticks = ax.get_xticks()
    ax.set_xticks(ticks)
    ax.set_xticklabels([f"{1.0 - t:.2f}" for t in ticks])
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KWARGS)
    plt.close(fig)


def render_pca_variance(result: PcaResult, path: str | Path) -> None:
    """Bar chart of per-component variance with the cumulative curve."""
    n = len(result.prop_variance)
    xs = np.arange(1, n + 1)
    fig, ax = plt.subplots(figsize=(8, 4))
    ax.bar(xs, result.prop_variance, color="#4878a8", label="proportion of variance")
    ax.plot(xs, result.cumulative, "o-", color="#a84848", label="cumulative")
    ax.set_xticks(xs)
    ax.set_xticklabels([f"PC{i}" for i in xs])
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("proportion of variance")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVEFIG_KWARGS)
    plt.close(fig)


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


def run_pipeline(
    cfg: PipelineConfig,
    columns: Sequence[str],
    matrix_rows: Sequence[tuple[str, dict[str, float]]],
    evals: Sequence[EvaluationRecord],
    input_hashes: dict[str, str],
) -> dict:
    """Execute redun -> rescale -> (varclus, pca, polr per dependent) -> report."""
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    data, kept_evals = build_analysis_matrix(columns, matrix_rows, evals)
    selection = redun_select(data, cfg.r2_threshold)
    selected = data.select(selection.kept)

    write_metric_matrix(
        out_dir / "selected_matrix.csv",
        selected.column_names,
        [
            (rec.pair_id, dict(zip(selected.column_names, row)))
            for rec, row in zip(kept_evals, selected.rows)
        ],
    )

    # rescale before clustering/PCA; varclus is rank-based so the monotone
    # rescaling cannot change it, but the stage order stays selection -> rescale
    unit_scaled = minmax_rescale(selected, 0.0, 1.0)
    tree = varclus(unit_scaled, method=cfg.linkage)
    pca_result = pca(unit_scaled)

    models: dict[str, dict] = {}
    for dep in cfg.dependents:
        lo, hi = DEPENDENT_RANGES[dep]
        y = dependent_vector(kept_evals, dep)
        mask = ~np.isnan(y)
        if mask.sum() < selected.n_cols + 2:
            logger.warning("dependent %r: too few rated rows (%d); skipped", dep, int(mask.sum()))
            models[dep] = {"skipped": f"only {int(mask.sum())} rated rows"}
            continue
        rated = drop_constant_columns(
            DataMatrix(selected.column_names, selected.rows[mask])
        )
        fit = ordered_logit_fit(minmax_rescale(rated, lo, hi), y[mask])
        models[dep] = polr_json(fit)

    report = {
        "manifest": {
            "tool": "sumeval",
            "version": __version__,
            "seed": cfg.seed,
            "config": {
                "r2_threshold": cfg.r2_threshold,
                "linkage": cfg.linkage,
                "dependents": list(cfg.dependents),
                "figures": cfg.figures,
                "digest": cfg.config_digest,
            },
            "inputs": dict(sorted(input_hashes.items())),
        },
        "n_evaluations": len(kept_evals),
        "redun": redun_json(selection, cfg.r2_threshold),
        "varclus": dendrogram_json(tree),
        "pca": pca_json(pca_result),
        "models": models,
    }
    dump_json(report, out_dir / "report.json")
    if cfg.figures:
        render_dendrogram(tree, out_dir / "varclus.png")
        render_pca_variance(pca_result, out_dir / "pca.png")
    return report
