"""Contrastive-triplet mining from Java sources.

Extraction is lexical (regex + brace matching), not a full grammar: summaries
and inner comments only need lexical structure, and malformed files are
skipped rather than guessed. Statement counting is pinned as: semicolons at
parenthesis depth zero plus non-empty block headers (`if (..) {`, `} else {`,
...), with comments and blank lines never counting. Statements folded into a
parenthesized argument (anonymous classes) count as part of the enclosing
statement.

Inner comments follow the leading-comment heuristic: a comment covers the run
of following statements up to a blank line or a closing brace. Trailing
same-line comments cover their own statement only.
"""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import CodeUnit, InnerComment, NegativeKind, Triplet
from .textnorm import first_sentence

logger = logging.getLogger(__name__)

DEFAULT_SATD_KEYWORDS = ("to-do", "fix-me", "todo", "fixme", "xxx", "hackme", "hack-me")


class JavaSyntaxError(Exception):
    """File-level brace mismatch; the file is skipped by directory mining."""


class MinerError(Exception):
    """Unsatisfiable mining precondition (e.g. too few distinct summaries)."""


@dataclass(frozen=True)
class MinerConfig:
    coverage_threshold: float = 0.25
    satd_keywords: tuple[str, ...] = DEFAULT_SATD_KEYWORDS
    min_summary_tokens: int = 3
    max_summary_tokens: int = 256
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if not (0.0 < self.coverage_threshold <= 1.0):
            raise ValueError(f"coverage_threshold must be in (0, 1], got {self.coverage_threshold}")
        object.__setattr__(
            self, "satd_keywords", tuple(k.lower() for k in self.satd_keywords)
        )


# ---------------------------------------------------------------------------
# Lexical scan: mask comments and literal contents, remember comment spans.
# ---------------------------------------------------------------------------


@dataclass
class _RawComment:
    start: int
    end: int
    text: str
    kind: str  # line | block | javadoc


def _scan(source: str) -> tuple[str, list[_RawComment]]:
    masked = list(source)
    comments: list[_RawComment] = []
    i, n = 0, len(source)
    while i < n:
        c = source[i]
        if c in "\"'":
            j = i + 1
            while j < n and source[j] not in (c, "\n"):
                j += 2 if source[j] == "\\" else 1
            for k in range(i + 1, min(j, n)):
                if masked[k] != "\n":
                    masked[k] = " "
            i = min(j + 1, n)
        elif source.startswith("//", i):
            j = source.find("\n", i)
            j = n if j == -1 else j
            comments.append(_RawComment(i, j, source[i:j], "line"))
            for k in range(i, j):
                masked[k] = " "
            i = j
        elif source.startswith("/*", i):
            j = source.find("*/", i + 2)
            j = n if j == -1 else j + 2
            kind = "javadoc" if source.startswith("/**", i) and j - i > 4 else "block"
            comments.append(_RawComment(i, j, source[i:j], kind))
            for k in range(i, j):
                if masked[k] != "\n":
                    masked[k] = " "
            i = j
        else:
            i += 1
    return "".join(masked), comments


def _statement_counts(masked_lines: Sequence[str]) -> list[int]:
    """Per-line statement counts: depth-0 semicolons plus non-empty block headers."""
    counts = [0] * len(masked_lines)
    paren = 0
    seg = False  # code seen since the last statement boundary
    for ln, line in enumerate(masked_lines):
        for ch in line:
            if ch == "(":
                paren += 1
                seg = True
            elif ch == ")":
                paren = max(0, paren - 1)
                seg = True
            elif ch == ";":
                if paren == 0:
                    counts[ln] += 1
                    seg = False
            elif ch == "{":
                if paren == 0:
                    if seg:
                        counts[ln] += 1
                    seg = False
            elif ch == "}":
                if paren == 0:
                    seg = False
            elif not ch.isspace():
                seg = True
    return counts


# ---------------------------------------------------------------------------
# Method detection
# ---------------------------------------------------------------------------

_CTRL_KEYWORDS = {
    "if", "for", "while", "switch", "catch", "synchronized", "do", "else",
    "try", "return", "throw", "new", "case", "assert",
}
_TYPE_DECL_RE = re.compile(r"\b(?:class|interface|enum|record)\b")
_ANNOTATION_RE = re.compile(r"^\s*(?:@[\w.$]+(?:\s*\([^)]*\))?\s*)+")
_NAME_BEFORE_PAREN_RE = re.compile(r"([A-Za-z_$][\w$]*)\s*\($")


def _is_method_header(header: str) -> bool:
    header = _ANNOTATION_RE.sub(" ", header).strip()
    if not header or _TYPE_DECL_RE.search(header):
        return False
    open_idx = header.find("(")
    if open_idx <= 0:
        return False
    m = _NAME_BEFORE_PAREN_RE.search(header[: open_idx + 1])
    if m is None or m.group(1) in _CTRL_KEYWORDS:
        return False
    depth = 0
    close_idx = -1
    for i in range(open_idx, len(header)):
        if header[i] == "(":
            depth += 1
        elif header[i] == ")":
            depth -= 1
            if depth == 0:
                close_idx = i
                break
    if close_idx == -1:
        return False
    tail = header[close_idx + 1 :].strip()
    return tail == "" or tail.startswith("throws")


def _match_brace(masked: str, open_idx: int) -> int:
    depth = 0
    for i in range(open_idx, len(masked)):
        if masked[i] == "{":
            depth += 1
        elif masked[i] == "}":
            depth -= 1
            if depth == 0:
                return i
    return -1


def _line_of(text: str, pos: int) -> int:
    return text.count("\n", 0, pos)


@dataclass
class _BodyComment:
    text: str
    start_line: int
    end_line: int
    trailing: bool
    inline_code_after: bool


_GUTTER_RE = re.compile(r"^\s*\*+\s?", re.MULTILINE)


def _clean_comment_text(raw: str) -> str:
    if raw.startswith("/*"):
        body = raw[2:]
        if body.endswith("*/"):
            body = body[:-2]
        body = body.lstrip("*")
        body = _GUTTER_RE.sub(" ", body)
    else:
        body = raw[2:]
    return " ".join(body.split())


def _collect_body_comments(
    body_raw: str,
    body_masked: str,
    comments: list[_RawComment],
    body_start: int,
    body_end: int,
) -> list[_BodyComment]:
    masked_lines = body_masked.split("\n")
    inside = [c for c in comments if c.start >= body_start and c.end <= body_end]
    out: list[_BodyComment] = []
    for c in inside:
        start_line = _line_of(body_raw, c.start - body_start)
        end_line = _line_of(body_raw, min(c.end, body_end) - body_start - 1) if c.end > c.start else start_line
        before = masked_lines[start_line][: c.start - body_start - _offset_of_line(body_raw, start_line)]
        after = masked_lines[end_line][c.end - body_start - _offset_of_line(body_raw, end_line) :]
        out.append(
            _BodyComment(
                text=_clean_comment_text(c.text),
                start_line=start_line,
                end_line=end_line,
                trailing=bool(before.strip()),
                inline_code_after=bool(after.strip()),
            )
        )
    # merge consecutive leading line-comment runs
    merged: list[_BodyComment] = []
    for bc in out:
        prev = merged[-1] if merged else None
        if (
            prev is not None
            and not prev.trailing
            and not bc.trailing
            and not prev.inline_code_after
            and bc.start_line == prev.end_line + 1
            and bc.start_line == bc.end_line
            and prev.text
            and bc.text
        ):
            prev.text = f"{prev.text} {bc.text}"
            prev.end_line = bc.end_line
            prev.inline_code_after = bc.inline_code_after
        else:
            merged.append(bc)
    return [bc for bc in merged if bc.text]


def _offset_of_line(text: str, line: int) -> int:
    if line == 0:
        return 0
    pos = -1
    for _ in range(line):
        pos = text.find("\n", pos + 1)
        if pos == -1:
            return len(text)
    return pos + 1


def _covered_statements(
    bc: _BodyComment,
    raw_lines: Sequence[str],
    masked_lines: Sequence[str],
    counts: Sequence[int],
) -> int:
    if bc.trailing:
        return counts[bc.start_line]
    covered = 0
    start = bc.end_line if bc.inline_code_after else bc.end_line + 1
    for ln in range(start, len(raw_lines)):
        if not raw_lines[ln].strip():
            break
        code = masked_lines[ln].strip()
        if code.startswith("}"):
            break
        covered += counts[ln]
        if "}" in code:
            break
    return covered


def _analyze_body(
    body_raw: str,
    body_masked: str,
    comments: list[_RawComment],
    body_start: int,
    body_end: int,
) -> tuple[tuple[InnerComment, ...], int]:
    raw_lines = body_raw.split("\n")
    masked_lines = body_masked.split("\n")
    counts = _statement_counts(masked_lines)
    body_comments = _collect_body_comments(body_raw, body_masked, comments, body_start, body_end)
    inner = tuple(
        InnerComment(
            text=bc.text,
            covered_statements=_covered_statements(bc, raw_lines, masked_lines, counts),
        )
        for bc in body_comments
    )
    return inner, sum(counts)


def associate_comments(body_source: str) -> list[InnerComment]:
    """Link each inner comment of a method body to the statements it documents.

    A leading comment covers the run of following statements up to a blank
    line or a closing brace; a trailing same-line comment covers its own
    statement only; consecutive leading line comments merge into one.
    """
    masked, comments = _scan(body_source)
    inner, _ = _analyze_body(body_source, masked, comments, 0, len(body_source))
    return list(inner)


def extract_methods(java_source: str, origin: str = "<memory>") -> list[CodeUnit]:
    """Extract one CodeUnit per method/constructor found in a Java source string.

    Raises JavaSyntaxError when the file's braces do not balance; methods whose
    own body cannot be matched are skipped with a warning.
    """
    masked, comments = _scan(java_source)
    if masked.count("{") != masked.count("}"):
        raise JavaSyntaxError(f"{origin}: unbalanced braces at file level")

    units: list[CodeUnit] = []
    name_counts: dict[str, int] = {}
    boundary = -1  # index of last ; { or } seen
    i = 0
    n = len(masked)
    while i < n:
        ch = masked[i]
        if ch in ";}":
            boundary = i
            i += 1
            continue
        if ch != "{":
            i += 1
            continue
        header_start = boundary + 1
        header = masked[header_start:i]
        if not _is_method_header(header):
            boundary = i
            i += 1
            continue
        close = _match_brace(masked, i)
        if close == -1:
            logger.warning("%s: method near offset %d has unmatched braces; skipped", origin, i)
            boundary = i
            i += 1
            continue

        blanked = _ANNOTATION_RE.sub(lambda m: " " * len(m.group(0)), header)
        sig_match = _NAME_BEFORE_PAREN_RE.search(blanked[: blanked.find("(") + 1])
        name = sig_match.group(1) if sig_match else "anonymous"
        k = name_counts.get(name, 0)
        name_counts[name] = k + 1
        unit_id = f"{origin}::{name}#{k}"

        sig_offset = header_start + (len(header) - len(header.lstrip()))
        source_text = java_source[sig_offset : close + 1]

        javadoc = None
        for c in comments:
            if c.kind == "javadoc" and c.start >= header_start and c.end <= i:
                javadoc = c
        summary = first_sentence(javadoc.text) if javadoc else None
        if summary == "":
            summary = None

        body_start, body_end = i + 1, close
        inner, statement_count = _analyze_body(
            java_source[body_start:body_end],
            masked[body_start:body_end],
            comments,
            body_start,
            body_end,
        )
        units.append(
            CodeUnit(
                id=unit_id,
                source_text=source_text,
                summary=summary,
                inner_comments=inner,
                statement_count=statement_count,
            )
        )
        boundary = close
        i = close + 1
    return units


def extract_from_files(paths: Iterable[str | Path]) -> list[CodeUnit]:
    """Extract from many .java files; files that fail brace matching are skipped."""
    units: list[CodeUnit] = []
    for path in paths:
        path = Path(path)
        try:
            units.extend(extract_methods(path.read_text(encoding="utf-8"), origin=path.name))
        except JavaSyntaxError as exc:
            logger.warning("skipping %s: %s", path, exc)
    return units


# ---------------------------------------------------------------------------
# Mining
# ---------------------------------------------------------------------------


def filter_satd(comments: Sequence[InnerComment], cfg: MinerConfig) -> list[InnerComment]:
    """Drop comments whose case-folded text contains any SATD keyword."""
    kept = []
    for c in comments:
        folded = c.text.casefold()
        if not any(k in folded for k in cfg.satd_keywords):
            kept.append(c)
    return kept


def _has_valid_summary(unit: CodeUnit, cfg: MinerConfig) -> bool:
    if unit.summary is None:
        return False
    return cfg.min_summary_tokens <= unit.token_count_summary <= cfg.max_summary_tokens


def mine_hard_negatives(units: Sequence[CodeUnit], cfg: MinerConfig) -> list[Triplet]:
    """One triplet per surviving low-coverage inner comment of each documented method."""
    triplets: list[Triplet] = []
    for unit in units:
        if not _has_valid_summary(unit, cfg) or unit.statement_count == 0:
            continue
        for comment in filter_satd(unit.inner_comments, cfg):
            if unit.coverage_ratio(comment) >= cfg.coverage_threshold:
                continue
            if comment.text == unit.summary:
                continue
            triplets.append(
                Triplet(
                    anchor_id=unit.id,
                    positive=unit.summary,
                    negative=comment.text,
                    negative_kind=NegativeKind.HARD,
                )
            )
    return triplets


def mine_random_negatives(units: Sequence[CodeUnit], cfg: MinerConfig) -> list[Triplet]:
    """One triplet per documented method with a seeded uniformly drawn negative."""
    pool = [u for u in units if _has_valid_summary(u, cfg)]
    if len(pool) < 2 or len({u.summary for u in pool}) < 2:
        raise MinerError("random negatives need at least 2 units with distinct summaries")
    rng = random.Random(cfg.rng_seed)
    triplets: list[Triplet] = []
    for idx, unit in enumerate(pool):
        negative = None
        for _ in range(100):
            j = rng.randrange(len(pool))
            if j != idx and pool[j].summary != unit.summary:
                negative = pool[j].summary
                break
        if negative is None:
            # deterministic fallback for summary-heavy corpora; same distribution
            candidates = [u.summary for k, u in enumerate(pool) if k != idx and u.summary != unit.summary]
            negative = candidates[rng.randrange(len(candidates))]
        triplets.append(
            Triplet(
                anchor_id=unit.id,
                positive=unit.summary,
                negative=negative,
                negative_kind=NegativeKind.RANDOM,
            )
        )
    return triplets


def mine_triplets(
    units: Sequence[CodeUnit],
    cfg: MinerConfig,
    hard_only: bool = False,
    random_only: bool = False,
) -> list[Triplet]:
    triplets: list[Triplet] = []
    if not hard_only:
        triplets.extend(mine_random_negatives(units, cfg))
    if not random_only:
        triplets.extend(mine_hard_negatives(units, cfg))
    return triplets
