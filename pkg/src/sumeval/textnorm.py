"""Deterministic text normalization shared by all metrics and the miner.

Tokenization rules are pinned here once so every consumer (overlap metrics,
TF-IDF, the triplet miner) sees identical token streams:

* summaries: split on whitespace/punctuation, punctuation dropped, lowercased;
* code: identifiers additionally split on camelCase / snake_case boundaries,
  string and char literal contents kept as words, comments and operators
  dropped;
* chrF bypasses tokenization and runs on the case-folded, whitespace-collapsed
  character sequence (see overlap.chrf).

All functions are pure and safe for parallel use.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from pathlib import Path

_WORD_RE = re.compile(r"[A-Za-z0-9]+")
# camelCase splitter: uppercase runs kept together unless followed by a
# lowercase tail (URLPath -> URL, Path); digits split off as their own tokens.
_CAMEL_RE = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|[0-9]+")
_STRING_RE = re.compile(r'"(?:\\.|[^"\\])*"|\'(?:\\.|[^\'\\])*\'')
_LINE_COMMENT_RE = re.compile(r"//[^\n]*")
_BLOCK_COMMENT_RE = re.compile(r"/\*.*?\*/", re.DOTALL)


class Origin(str, Enum):
    SUMMARY = "summary"
    CODE = "code"


@dataclass(frozen=True)
class TokenStream:
    """Ordered lowercase tokens plus the kind of text they came from."""

    tokens: tuple[str, ...]
    origin: Origin = Origin.SUMMARY

    def __post_init__(self) -> None:
        if any(not t for t in self.tokens):
            raise ValueError("TokenStream must not contain empty tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def __iter__(self):
        return iter(self.tokens)


def as_tokens(stream) -> tuple[str, ...]:
    """Accept a TokenStream or any sequence of strings."""
    if isinstance(stream, TokenStream):
        return stream.tokens
    return tuple(stream)


def tokenize_summary(text: str) -> TokenStream:
    """Split on whitespace and punctuation boundaries; drop punctuation; lowercase."""
    tokens = tuple(m.group(0).lower() for m in _WORD_RE.finditer(text))
    return TokenStream(tokens, Origin.SUMMARY)


def _split_identifier(piece: str) -> list[str]:
    return [m.group(0).lower() for m in _CAMEL_RE.finditer(piece)]


def tokenize_code(text: str) -> TokenStream:
    """Tokenize source code into lowercase words.

    Identifiers are split on camelCase and snake_case; string/char literal
    contents are retained as words; comments and operators are dropped.
    """
    literals: list[str] = []

    def _capture(m: re.Match) -> str:
        literals.append(m.group(0)[1:-1])
        return " "

    stripped = _BLOCK_COMMENT_RE.sub(" ", text)
    stripped = _STRING_RE.sub(_capture, stripped)
    stripped = _LINE_COMMENT_RE.sub(" ", stripped)

    tokens: list[str] = []
    for piece in _WORD_RE.findall(stripped):
        tokens.extend(_split_identifier(piece))
    for lit in literals:
        for piece in _WORD_RE.findall(lit):
            tokens.extend(_split_identifier(piece))
    return TokenStream(tuple(tokens), Origin.CODE)


def count_summary_tokens(text: str) -> int:
    """Whitespace/camelCase token count used for the 3..256 summary filter."""
    n = 0
    for piece in _WORD_RE.findall(text):
        n += len(_split_identifier(piece))
    return n


# ---------------------------------------------------------------------------
# Porter stemmer (classic 1980 algorithm), used by METEOR's stem stage.
# ---------------------------------------------------------------------------

_VOWELS = "aeiou"


def _is_cons(word: str, i: int) -> bool:
    c = word[i]
    if c in _VOWELS:
        return False
    if c == "y":
        return i == 0 or not _is_cons(word, i - 1)
    return True


def _measure(stem: str) -> int:
    # number of VC sequences in [C](VC)^m[V]
    m = 0
    prev_vowel = False
    for i in range(len(stem)):
        if _is_cons(stem, i):
            if prev_vowel:
                m += 1
            prev_vowel = False
        else:
            prev_vowel = True
    return m


def _has_vowel(stem: str) -> bool:
    return any(not _is_cons(stem, i) for i in range(len(stem)))


def _ends_double_cons(word: str) -> bool:
    return len(word) >= 2 and word[-1] == word[-2] and _is_cons(word, len(word) - 1)


def _ends_cvc(word: str) -> bool:
    if len(word) < 3:
        return False
    if not (_is_cons(word, len(word) - 3) and not _is_cons(word, len(word) - 2) and _is_cons(word, len(word) - 1)):
        return False
    return word[-1] not in "wxy"


_STEP2_RULES = [
    ("ational", "ate"), ("tional", "tion"), ("enci", "ence"), ("anci", "ance"),
    ("izer", "ize"), ("abli", "able"), ("alli", "al"), ("entli", "ent"),
    ("eli", "e"), ("ousli", "ous"), ("ization", "ize"), ("ation", "ate"),
    ("ator", "ate"), ("alism", "al"), ("iveness", "ive"), ("fulness", "ful"),
    ("ousness", "ous"), ("aliti", "al"), ("iviti", "ive"), ("biliti", "ble"),
]

_STEP3_RULES = [
    ("icate", "ic"), ("ative", ""), ("alize", "al"), ("iciti", "ic"),
    ("ical", "ic"), ("ful", ""), ("ness", ""),
]

_STEP4_SUFFIXES = [
    "al", "ance", "ence", "er", "ic", "able", "ible", "ant", "ement",
    "ment", "ent", "ion", "ou", "ism", "ate", "iti", "ous", "ive", "ize",
]


def _longest_rule(word: str, rules):
    best = None
    for suffix, repl in rules:
        if word.endswith(suffix) and (best is None or len(suffix) > len(best[0])):
            best = (suffix, repl)
    return best


@lru_cache(maxsize=65536)
def porter_stem(token: str) -> str:
    """Stem a lowercase token with the classic Porter algorithm."""
    w = token
    if len(w) <= 2:
        return w

    # step 1a
    if w.endswith("sses"):
        w = w[:-2]
    elif w.endswith("ies"):
        w = w[:-2]
    elif w.endswith("ss"):
        pass
    elif w.endswith("s"):
        w = w[:-1]

    # step 1b
    fired = False
    if w.endswith("eed"):
        if _measure(w[:-3]) > 0:
            w = w[:-1]
    elif w.endswith("ed"):
        if _has_vowel(w[:-2]):
            w = w[:-2]
            fired = True
    elif w.endswith("ing"):
        if _has_vowel(w[:-3]):
            w = w[:-3]
            fired = True
    if fired:
        if w.endswith(("at", "bl", "iz")):
            w += "e"
        elif _ends_double_cons(w) and w[-1] not in "lsz":
            w = w[:-1]
        elif _measure(w) == 1 and _ends_cvc(w):
            w += "e"

    # step 1c
    if w.endswith("y") and _has_vowel(w[:-1]):
        w = w[:-1] + "i"

    # step 2
    rule = _longest_rule(w, _STEP2_RULES)
    if rule is not None:
        suffix, repl = rule
        stem = w[: len(w) - len(suffix)]
        if _measure(stem) > 0:
            w = stem + repl

    # step 3
    rule = _longest_rule(w, _STEP3_RULES)
    if rule is not None:
        suffix, repl = rule
        stem = w[: len(w) - len(suffix)]
        if _measure(stem) > 0:
            w = stem + repl

    # step 4
    suffix = None
    for s in _STEP4_SUFFIXES:
        if w.endswith(s) and (suffix is None or len(s) > len(suffix)):
            suffix = s
    if suffix is not None:
        stem = w[: len(w) - len(suffix)]
        if _measure(stem) > 1:
            if suffix != "ion" or (stem and stem[-1] in "st"):
                w = stem

    # step 5a
    if w.endswith("e"):
        stem = w[:-1]
        m = _measure(stem)
        if m > 1 or (m == 1 and not _ends_cvc(stem)):
            w = stem

    # step 5b
    if _measure(w) > 1 and _ends_double_cons(w) and w.endswith("l"):
        w = w[:-1]

    return w


# ---------------------------------------------------------------------------
# Javadoc first-sentence extraction.
# ---------------------------------------------------------------------------

_SENTENCE_END_RE = re.compile(r"\.(?=\s|$)")


def first_sentence(doc: str) -> str:
    """Extract the first sentence of a Javadoc block.

    Strips `/** ... */` markup and leading `*` gutters, drops the @-tag
    section entirely, keeps the first paragraph (up to a blank line), and
    cuts at the first period followed by whitespace or end of text. Without
    such a period the whole first paragraph is returned. Periods inside
    run-together abbreviations ("e.g.x") do not split; "e.g. " does — a
    documented limitation of the period-plus-whitespace rule.
    """
    text = doc.strip()
    if text.startswith("/**"):
        text = text[3:]
    elif text.startswith("/*"):
        text = text[2:]
    if text.endswith("*/"):
        text = text[:-2]

    lines: list[str] = []
    for raw in text.splitlines():
        line = raw.strip()
        if line.startswith("*"):
            line = line[1:].strip()
        if line.startswith("@"):
            break  # tag section: description ends here
        lines.append(line)

    # first paragraph only
    paragraph_lines: list[str] = []
    for line in lines:
        if not line and paragraph_lines:
            break
        if line:
            paragraph_lines.append(line)
    paragraph = " ".join(paragraph_lines).strip()

    m = _SENTENCE_END_RE.search(paragraph)
    if m:
        return paragraph[: m.start()].strip()
    return paragraph


# ---------------------------------------------------------------------------
# Optional synonym table for METEOR's synonym stage.
# ---------------------------------------------------------------------------


@dataclass
class SynonymTable:
    """word -> synonym set, loaded from JSONL `{"word": ..., "synonyms": [...]}`."""

    groups: dict[str, frozenset[str]] = field(default_factory=dict)

    @classmethod
    def load(cls, path: str | Path) -> "SynonymTable":
        groups: dict[str, frozenset[str]] = {}
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                raw = raw.strip()
                if not raw:
                    continue
                try:
                    obj = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise ValueError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
                word = obj["word"].lower()
                syns = frozenset(s.lower() for s in obj["synonyms"]) | {word}
                groups[word] = syns
        return cls(groups)

    def are_synonyms(self, a: str, b: str) -> bool:
        if a == b:
            return True
        return b in self.groups.get(a, frozenset()) or a in self.groups.get(b, frozenset())
