"""Words/characters-overlap metrics computed per candidate/reference pair.

All functions are pure and stateless; pairs can be scored in parallel with
deterministic results. Candidate/reference arguments accept a TokenStream or
any sequence of strings (chrF takes raw strings instead).

Conventions pinned here, shared with the test oracles:

* sentence BLEU uses add-1 smoothing on numerator and denominator whenever an
  n-gram precision for n > 1 would be zero (including the no-n-gram case);
* the brevity penalty min(1, e^(1-r/c)) multiplies each BLEU-n, and BLEU-A
  applies it once to the geometric mean of the four smoothed precisions;
* chrF runs on case-folded text with whitespace runs collapsed to single
  spaces; n-gram orders where neither side has any n-grams are skipped.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Optional, Sequence

from .textnorm import SynonymTable, as_tokens, porter_stem


@dataclass(frozen=True)
class MetricScore:
    """A named score with its declared range; clamps float noise up to 1e-9."""

    name: str
    value: float
    lo: float = 0.0
    hi: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.value):
            raise ValueError(f"{self.name}: non-finite score {self.value}")
        if not (self.lo - 1e-9 <= self.value <= self.hi + 1e-9):
            raise ValueError(f"{self.name}: {self.value} outside [{self.lo}, {self.hi}]")
        object.__setattr__(self, "value", min(self.hi, max(self.lo, self.value)))


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def _clipped_matches(cand: Counter, ref: Counter) -> int:
    return sum(min(c, ref[g]) for g, c in cand.items())


# ---------------------------------------------------------------------------
# BLEU
# ---------------------------------------------------------------------------


def _brevity_penalty(c: int, r: int) -> float:
    if c == 0:
        return 0.0
    return min(1.0, math.exp(1.0 - r / c))


def _bleu_precision(candidate: Sequence[str], reference: Sequence[str], n: int) -> float:
    cand_counts = _ngrams(candidate, n)
    total = sum(cand_counts.values())
    matches = _clipped_matches(cand_counts, _ngrams(reference, n))
    if n > 1 and (matches == 0 or total == 0):
        return (matches + 1) / (total + 1)
    if total == 0:
        return 0.0
    return matches / total


def bleu_n(candidate, reference, n: int, brevity_penalty: bool = True) -> MetricScore:
    """Sentence-level modified n-gram precision with clipping and brevity penalty."""
    if not 1 <= n <= 4:
        raise ValueError(f"n must be in 1..4, got {n}")
    cand = as_tokens(candidate)
    ref = as_tokens(reference)
    name = f"BLEU-{n}"
    if not cand:
        return MetricScore(name, 0.0)
    p = _bleu_precision(cand, ref, n)
    bp = _brevity_penalty(len(cand), len(ref)) if brevity_penalty else 1.0
    return MetricScore(name, bp * p)


def bleu_a(candidate, reference, brevity_penalty: bool = True) -> MetricScore:
    """Geometric mean of the four smoothed precisions, brevity penalty applied once."""
    cand = as_tokens(candidate)
    ref = as_tokens(reference)
    if not cand:
        return MetricScore("BLEU-A", 0.0)
    precisions = [_bleu_precision(cand, ref, n) for n in (1, 2, 3, 4)]
    if any(p == 0.0 for p in precisions):
        geo = 0.0
    else:
        geo = math.exp(sum(math.log(p) for p in precisions) / 4.0)
    bp = _brevity_penalty(len(cand), len(ref)) if brevity_penalty else 1.0
    return MetricScore("BLEU-A", bp * geo)


# ---------------------------------------------------------------------------
# ROUGE
# ---------------------------------------------------------------------------


def _f1(p: float, r: float) -> float:
    return 2 * p * r / (p + r) if p + r > 0 else 0.0


def rouge_n(candidate, reference, n: int) -> PRF:
    """Clipped n-gram overlap reported as precision, recall, and F1."""
    if not 1 <= n <= 4:
        raise ValueError(f"n must be in 1..4, got {n}")
    cand = as_tokens(candidate)
    ref = as_tokens(reference)
    cand_counts = _ngrams(cand, n)
    ref_counts = _ngrams(ref, n)
    cand_total = sum(cand_counts.values())
    ref_total = sum(ref_counts.values())
    matches = _clipped_matches(cand_counts, ref_counts)
    p = matches / cand_total if cand_total else 0.0
    r = matches / ref_total if ref_total else 0.0
    return PRF(p, r, _f1(p, r))


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        curr = [0]
        for j, y in enumerate(b, start=1):
            curr.append(prev[j - 1] + 1 if x == y else max(prev[j], curr[j - 1]))
        prev = curr
    return prev[-1]


def rouge_l(candidate, reference) -> PRF:
    """Longest-common-subsequence precision/recall/F1."""
    cand = as_tokens(candidate)
    ref = as_tokens(reference)
    if not cand or not ref:
        return PRF(0.0, 0.0, 0.0)
    lcs = _lcs_length(cand, ref)
    p = lcs / len(cand)
    r = lcs / len(ref)
    return PRF(p, r, _f1(p, r))


def rouge_w(candidate, reference, weight: float = 1.2) -> PRF:
    """Weighted LCS rewarding consecutive matches with f(k) = k**weight.

    Computes the exact maximum over all monotone alignments (an alignment's
    score is the sum of f(run length) over its consecutive runs) via a DP
    that tracks the length of the run ending at each matched cell.
    """
    if weight <= 1.0:
        raise ValueError(f"weight must be > 1, got {weight}")
    cand = as_tokens(candidate)
    ref = as_tokens(reference)
    if not cand or not ref:
        return PRF(0.0, 0.0, 0.0)

    m, n = len(cand), len(ref)
    f = [0.0] + [float(k) ** weight for k in range(1, min(m, n) + 1)]
    # best[i][j]: max score over prefixes with all runs completed;
    # run_scores[j]: {run length k: max score with a k-run ending at (i, j)}
    best = [[0.0] * (n + 1) for _ in range(m + 1)]
    prev_runs: list[Optional[dict[int, float]]] = [None] * (n + 1)
    for i in range(1, m + 1):
        curr_runs: list[Optional[dict[int, float]]] = [None] * (n + 1)
        row = best[i]
        above = best[i - 1]
        for j in range(1, n + 1):
            cell = above[j] if above[j] >= row[j - 1] else row[j - 1]
            if cand[i - 1] == ref[j - 1]:
                d = {1: above[j - 1] + f[1]}
                extend = prev_runs[j - 1]
                if extend:
                    for k, score in extend.items():
                        d[k + 1] = score + f[k + 1] - f[k]
                curr_runs[j] = d
                cell = max(cell, max(d.values()))
            row[j] = cell
        prev_runs = curr_runs
    wlcs = best[m][n]
    # f is a pure power, so f_inv(wlcs / f(L)) == f_inv(wlcs) / L; the
    # exponentiation can overshoot 1 by an ulp on perfect matches
    p = min(1.0, wlcs ** (1.0 / weight) / m)
    r = min(1.0, wlcs ** (1.0 / weight) / n)
    return PRF(p, r, _f1(p, r))


# ---------------------------------------------------------------------------
# METEOR
# ---------------------------------------------------------------------------


def _stage_align(
    cand: Sequence[str],
    ref: Sequence[str],
    cand_free: list[bool],
    ref_free: list[bool],
    match,
) -> list[tuple[int, int]]:
    pairs = []
    for i, ct in enumerate(cand):
        if not cand_free[i]:
            continue
        for j, rt in enumerate(ref):
            if ref_free[j] and match(ct, rt):
                pairs.append((i, j))
                cand_free[i] = False
                ref_free[j] = False
                break
    return pairs


def _count_chunks(pairs: list[tuple[int, int]]) -> int:
    pairs = sorted(pairs)
    chunks = 0
    prev: Optional[tuple[int, int]] = None
    for i, j in pairs:
        if prev is None or i != prev[0] + 1 or j != prev[1] + 1:
            chunks += 1
        prev = (i, j)
    return chunks


def meteor(candidate, reference, synonyms: Optional[SynonymTable] = None) -> MetricScore:
    """Staged unigram alignment (exact, stem, optional synonym) with chunk penalty.

    Classic parameterization: Fmean = 10PR/(R+9P), penalty = 0.5*(chunks/m)^3.
    Each token matches at most once; within a stage candidate tokens take the
    leftmost free reference token.
    """
    cand = as_tokens(candidate)
    ref = as_tokens(reference)
    if not cand or not ref:
        return MetricScore("METEOR", 0.0)

    cand_free = [True] * len(cand)
    ref_free = [True] * len(ref)
    pairs = _stage_align(cand, ref, cand_free, ref_free, lambda a, b: a == b)
    pairs += _stage_align(
        cand, ref, cand_free, ref_free, lambda a, b: porter_stem(a) == porter_stem(b)
    )
    if synonyms is not None:
        pairs += _stage_align(cand, ref, cand_free, ref_free, synonyms.are_synonyms)

    m = len(pairs)
    if m == 0:
        return MetricScore("METEOR", 0.0)
    p = m / len(cand)
    r = m / len(ref)
    fmean = 10 * p * r / (r + 9 * p)
    penalty = 0.5 * (_count_chunks(pairs) / m) ** 3
    return MetricScore("METEOR", fmean * (1.0 - penalty))


# ---------------------------------------------------------------------------
# chrF
# ---------------------------------------------------------------------------


def _fold_text(text: str) -> str:
    return " ".join(text.lower().split())


def chrf(
    candidate_text: str,
    reference_text: str,
    max_n: int = 6,
    beta: float = 2.0,
) -> MetricScore:
    """Character n-gram F-beta score on case-folded, whitespace-collapsed text."""
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    if beta <= 0:
        raise ValueError(f"beta must be > 0, got {beta}")
    cand = _fold_text(candidate_text)
    ref = _fold_text(reference_text)
    if not cand and not ref:
        return MetricScore("chrF", 1.0)
    if not cand or not ref:
        return MetricScore("chrF", 0.0)

    precisions: list[float] = []
    recalls: list[float] = []
    for n in range(1, max_n + 1):
        cand_counts = _ngrams(cand, n)
        ref_counts = _ngrams(ref, n)
        cand_total = sum(cand_counts.values())
        ref_total = sum(ref_counts.values())
        if cand_total == 0 and ref_total == 0:
            continue  # order carries no information for either side
        matches = _clipped_matches(cand_counts, ref_counts)
        precisions.append(matches / cand_total if cand_total else 0.0)
        recalls.append(matches / ref_total if ref_total else 0.0)

    chr_p = sum(precisions) / len(precisions)
    chr_r = sum(recalls) / len(recalls)
    if chr_p + chr_r == 0:
        return MetricScore("chrF", 0.0)
    b2 = beta * beta
    score = (1 + b2) * chr_p * chr_r / (b2 * chr_p + chr_r)
    return MetricScore("chrF", score)


# ---------------------------------------------------------------------------
# Jaccard and c_coeff
# ---------------------------------------------------------------------------


def jaccard(candidate, reference) -> MetricScore:
    """|set intersection| / |set union|; two empty sets count as identical."""
    a = set(as_tokens(candidate))
    b = set(as_tokens(reference))
    if not a and not b:
        return MetricScore("Jaccard", 1.0)
    return MetricScore("Jaccard", len(a & b) / len(a | b))


def levenshtein(a: str, b: str) -> int:
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, start=1):
        curr = [i]
        for j, cb in enumerate(b, start=1):
            curr.append(min(prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = curr
    return prev[-1]


def c_coeff(summary, code) -> MetricScore:
    """Fraction of summary words within one edit of some code word.

    Insensitive to code-token order and duplication; an empty summary scores 0.
    """
    summary_tokens = as_tokens(summary)
    code_words = set(as_tokens(code))
    if not summary_tokens:
        return MetricScore("c_coeff", 0.0)
    similar = 0
    for tok in summary_tokens:
        if tok in code_words:
            similar += 1
            continue
        if any(
            abs(len(tok) - len(w)) <= 1 and levenshtein(tok, w) <= 1 for w in code_words
        ):
            similar += 1
    return MetricScore("c_coeff", similar / len(summary_tokens))
