"""Correlation clustering, variable selection, rescaling, PCA, and BH adjustment.

All procedures are deterministic for a fixed input ordering; ties in the
redun removal order break by column order. Warnings about degenerate columns
go through the module logger.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import linkage
from scipy.stats import rankdata

logger = logging.getLogger(__name__)


class AnalysisError(Exception):
    """Unsatisfiable precondition or numerical failure in an analysis step."""


@dataclass(frozen=True)
class DataMatrix:
    """Rectangular all-finite matrix with named columns."""

    column_names: tuple[str, ...]
    rows: np.ndarray  # shape (n_rows, n_cols)

    def __post_init__(self) -> None:
        rows = np.asarray(self.rows, dtype=float)
        if rows.ndim != 2:
            raise AnalysisError(f"DataMatrix must be 2-d, got shape {rows.shape}")
        if rows.shape[1] != len(self.column_names):
            raise AnalysisError(
                f"{len(self.column_names)} column names but {rows.shape[1]} columns"
            )
        if not np.all(np.isfinite(rows)):
            raise AnalysisError("DataMatrix contains non-finite values")
        object.__setattr__(self, "rows", rows)

    @property
    def n_rows(self) -> int:
        return self.rows.shape[0]

    @property
    def n_cols(self) -> int:
        return self.rows.shape[1]

    def select(self, names: Sequence[str]) -> "DataMatrix":
        idx = [self.column_names.index(n) for n in names]
        return DataMatrix(tuple(names), self.rows[:, idx])


def spearman_matrix(data: DataMatrix) -> np.ndarray:
    """Pairwise Spearman rho with average ranks for ties; unit diagonal.

    A constant column correlates 0 with everything (warning emitted).
    """
    if data.n_rows < 2:
        raise AnalysisError("spearman_matrix needs at least 2 rows")
    ranks = np.column_stack([rankdata(data.rows[:, j]) for j in range(data.n_cols)])
    centered = ranks - ranks.mean(axis=0)
    sd = centered.std(axis=0)
    constant = sd == 0
    for j in np.flatnonzero(constant):
        logger.warning("constant column %r: correlations set to 0", data.column_names[j])
    safe_sd = np.where(constant, 1.0, sd)
    z = centered / safe_sd
    rho = z.T @ z / data.n_rows
    rho[constant, :] = 0.0
    rho[:, constant] = 0.0
    np.fill_diagonal(rho, 1.0)
    return np.clip(rho, -1.0, 1.0)


@dataclass(frozen=True)
class Dendrogram:
    """Variable-clustering merge list; heights are 1 - rho^2 distances."""

    labels: tuple[str, ...]
    # each merge: (left, right, height, size); left/right index labels for
    # singletons (0..n-1) and earlier merges (n, n+1, ...) scipy-style
    merges: tuple[tuple[int, int, float, int], ...]


def varclus(data: DataMatrix, method: str = "average") -> Dendrogram:
    """Agglomerative clustering of variables with similarity rho squared."""
    if data.n_cols < 2:
        raise AnalysisError("varclus needs at least 2 columns")
    if method not in ("single", "complete", "average"):
        raise AnalysisError(f"unsupported linkage {method!r}")
    rho = spearman_matrix(data)
    dist = 1.0 - rho**2
    np.fill_diagonal(dist, 0.0)
    condensed = dist[np.triu_indices(data.n_cols, k=1)]
    z = linkage(condensed, method=method)
    merges = tuple(
        (int(a), int(b), float(h), int(size)) for a, b, h, size in z
    )
    heights = [m[2] for m in merges]
    if any(h2 < h1 - 1e-12 for h1, h2 in zip(heights, heights[1:])):
        raise AnalysisError("non-monotone merge heights")
    return Dendrogram(labels=data.column_names, merges=merges)


@dataclass(frozen=True)
class RedunResult:
    kept: tuple[str, ...]
    removed: tuple[tuple[str, float], ...]  # (name, adjusted R^2) in removal order


def _adjusted_r2(y: np.ndarray, x: np.ndarray) -> float:
    """Adjusted R^2 of an OLS fit of y on x plus intercept (ridge 1e-8 fallback)."""
    n, p = x.shape
    design = np.column_stack([np.ones(n), x])
    try:
        beta, *_ = np.linalg.lstsq(design, y, rcond=None)
    except np.linalg.LinAlgError:
        logger.warning("singular design; falling back to ridge with penalty 1e-8")
        gram = design.T @ design + 1e-8 * np.eye(design.shape[1])
        beta = np.linalg.solve(gram, design.T @ y)
    resid = y - design @ beta
    ss_res = float(resid @ resid)
    centered = y - y.mean()
    ss_tot = float(centered @ centered)
    if ss_tot == 0:
        return 1.0  # constant target: trivially predictable
    r2 = 1.0 - ss_res / ss_tot
    if n - p - 1 <= 0:
        return r2
    return 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1)


def redun_select(data: DataMatrix, r2_threshold: float = 0.8) -> RedunResult:
    """Stepwise removal of variables predictable from the rest by OLS.

    Each round regresses every remaining variable on all others and removes
    the one with the highest adjusted R^2 if it reaches the threshold; ties
    break by column order.
    """
    if not (0.0 < r2_threshold < 1.0):
        raise AnalysisError(f"r2_threshold must be in (0, 1), got {r2_threshold}")
    if data.n_rows <= data.n_cols + 1:
        raise AnalysisError(
            f"redun needs n_rows > n_cols + 1, got {data.n_rows} rows for {data.n_cols} columns"
        )
    names = list(data.column_names)
    cols = {n: data.rows[:, i] for i, n in enumerate(data.column_names)}
    removed: list[tuple[str, float]] = []
    while len(names) >= 2:
        best_name = None
        best_r2 = -np.inf
        for name in names:
            others = [cols[n] for n in names if n != name]
            r2 = _adjusted_r2(cols[name], np.column_stack(others))
            if r2 > best_r2:
                best_r2 = r2
                best_name = name
        if best_r2 < r2_threshold:
            break
        names.remove(best_name)
        removed.append((best_name, float(best_r2)))
    return RedunResult(kept=tuple(names), removed=tuple(removed))


def minmax_rescale(data: DataMatrix, lo: float = 0.0, hi: float = 1.0) -> DataMatrix:
    """Map each column affinely onto [lo, hi]; constant columns map to lo."""
    if hi <= lo:
        raise AnalysisError(f"need hi > lo, got [{lo}, {hi}]")
    out = np.empty_like(data.rows)
    for j in range(data.n_cols):
        col = data.rows[:, j]
        cmin, cmax = col.min(), col.max()
        if cmax == cmin:
            logger.warning("constant column %r rescaled to %s", data.column_names[j], lo)
            out[:, j] = lo
        else:
            out[:, j] = lo + (hi - lo) * (col - cmin) / (cmax - cmin)
    return DataMatrix(data.column_names, out)


@dataclass(frozen=True)
class PcaResult:
    prop_variance: np.ndarray  # per PC
    cumulative: np.ndarray
    eigenvectors: np.ndarray  # columns are PCs, rows follow column_names
    column_names: tuple[str, ...]


def pca(data: DataMatrix) -> PcaResult:
    """PCA by SVD of the column-centered matrix (no further scaling).

    Variance proportions are squared singular values normalized to 1; near-zero
    singular values (below the matrix_rank cutoff) are zeroed so rank-deficient
    inputs report exact zeros. Each eigenvector's largest-magnitude entry is
    made positive.
    """
    if data.n_rows < data.n_cols or data.n_cols < 1:
        raise AnalysisError(
            f"pca needs n_rows >= n_cols >= 1, got {data.n_rows}x{data.n_cols}"
        )
    centered = data.rows - data.rows.mean(axis=0)
    u, s, vt = np.linalg.svd(centered, full_matrices=False)
    cutoff = s.max(initial=0.0) * max(centered.shape) * np.finfo(float).eps
    s = np.where(s > cutoff, s, 0.0)
    total = float((s**2).sum())
    if total == 0:
        raise AnalysisError("pca input has zero variance")
    prop = s**2 / total
    vectors = vt.T.copy()
    for j in range(vectors.shape[1]):
        pivot = np.argmax(np.abs(vectors[:, j]))
        if vectors[pivot, j] < 0:
            vectors[:, j] = -vectors[:, j]
    return PcaResult(
        prop_variance=prop,
        cumulative=np.cumsum(prop),
        eigenvectors=vectors,
        column_names=data.column_names,
    )


def benjamini_hochberg(p_values: Sequence[float]) -> list[float]:
    """Step-up adjustment: sort ascending, take running minima of (m/j) p(j)."""
    p = np.asarray(p_values, dtype=float)
    if p.size == 0:
        return []
    if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise AnalysisError("p-values must lie in [0, 1]")
    m = p.size
    order = np.argsort(p, kind="stable")
    scaled = (m / np.arange(1, m + 1)) * p[order]  # (m/j) * p(j), hand-table grain
    adjusted_sorted = np.minimum.accumulate(scaled[::-1])[::-1]
    adjusted_sorted = np.clip(adjusted_sorted, 0.0, 1.0)
    out = np.empty(m)
    out[order] = adjusted_sorted
    return out.tolist()
