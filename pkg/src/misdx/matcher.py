"""Approximate dictionary matching of disease concepts in titles.

Similarity is Jaccard over character n-grams of the lowercased,
whitespace-collapsed span and dictionary term. An inverted n-gram index
narrows the candidate entries; it never changes the result compared with
scoring every span against every entry.
"""

from __future__ import annotations

import logging
import os
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

log = logging.getLogger(__name__)

CUI_RE = re.compile(r"C\d{7}\Z")
TOKEN_RE = re.compile(r"[^\W_]+")
_WS = re.compile(r"\s+")

DEFAULT_TUIS = frozenset({"T047", "T191"})
DEFAULT_THRESHOLD = 0.7
DEFAULT_GRAM_SIZE = 3
DEFAULT_WINDOW = 5


class DictionaryError(ValueError):
    pass


def cui_number(cui: str) -> int:
    return int(cui[1:])


def normalize(text: str) -> str:
    return _WS.sub(" ", text.lower()).strip()


def gram_set(text: str, n: int = DEFAULT_GRAM_SIZE) -> frozenset[str]:
    """Contiguous character n-grams; strings shorter than ``n`` are their own gram."""
    if len(text) < n:
        return frozenset((text,))
    return frozenset(text[i:i + n] for i in range(len(text) - n + 1))


def jaccard(a: frozenset[str], b: frozenset[str]) -> float:
    inter = len(a & b)
    return inter / (len(a) + len(b) - inter)


@dataclass(frozen=True)
class DictionaryEntry:
    cui: str
    tui: str
    term: str
    preferred_term: str


@dataclass(frozen=True)
class ConceptMatch:
    start: int
    end: int
    matched_text: str
    cui: str
    preferred_term: str
    similarity: float
    tui: str
    term: str = ""

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class MatchGroup:
    winner: ConceptMatch
    start: int
    end: int
    candidates: tuple[ConceptMatch, ...] = ()


@dataclass
class DictionaryIndex:
    entries: list[DictionaryEntry]
    gram_size: int = DEFAULT_GRAM_SIZE
    threshold: float = DEFAULT_THRESHOLD
    max_window_tokens: int = DEFAULT_WINDOW
    grams: list[frozenset[str]] = field(init=False, repr=False)
    gram_index: dict[str, list[int]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        if not 0 < self.threshold <= 1:
            raise ValueError(f"threshold must be in (0, 1], got {self.threshold}")
        if self.gram_size < 2:
            raise ValueError("gram_size must be at least 2")
        if self.max_window_tokens < 1:
            raise ValueError("max_window_tokens must be at least 1")
        self.grams = [gram_set(normalize(e.term), self.gram_size) for e in self.entries]
        index: dict[str, list[int]] = defaultdict(list)
        for i, grams in enumerate(self.grams):
            for g in grams:
                index[g].append(i)
        self.gram_index = dict(index)

    def labels(self) -> dict[str, str]:
        """Preferred term per CUI, first dictionary row wins."""
        out: dict[str, str] = {}
        for e in self.entries:
            out.setdefault(e.cui, e.preferred_term)
        return out

    def lookup(self, text: str) -> list[tuple[int, float]]:
        """(entry id, similarity) for every entry at or above threshold."""
        query = gram_set(normalize(text), self.gram_size)
        overlap: dict[int, int] = defaultdict(int)
        for g in query:
            for i in self.gram_index.get(g, ()):
                overlap[i] += 1
        qn = len(query)
        hits = []
        for i, inter in overlap.items():
            en = len(self.grams[i])
            if min(qn, en) / max(qn, en) < self.threshold:
                continue
            sim = inter / (qn + en - inter)
            if sim >= self.threshold:
                hits.append((i, sim))
        return hits


def load_dictionary(
    source: str | os.PathLike,
    allowed_tuis: Iterable[str] = DEFAULT_TUIS,
    gram_size: int = DEFAULT_GRAM_SIZE,
    threshold: float = DEFAULT_THRESHOLD,
    max_window_tokens: int = DEFAULT_WINDOW,
) -> DictionaryIndex:
    """Read a ``cui<TAB>tui<TAB>term<TAB>preferred_term`` file into an index."""
    allowed = frozenset(allowed_tuis)
    entries: list[DictionaryEntry] = []
    seen: set[tuple[str, str]] = set()
    with open(source, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 4:
                raise DictionaryError(f"{source}:{lineno}: expected 4 columns, got {len(cols)}")
            cui, tui, term, preferred = (c.strip() for c in cols)
            if not CUI_RE.match(cui):
                raise DictionaryError(f"{source}:{lineno}: bad CUI {cui!r}")
            if not term:
                raise DictionaryError(f"{source}:{lineno}: empty term")
            if tui not in allowed:
                continue
            key = (normalize(term), cui)
            if key in seen:
                continue
            seen.add(key)
            entries.append(DictionaryEntry(cui, tui, term, preferred or term))
    if not entries:
        raise DictionaryError(f"{source}: no usable entries for semantic types {sorted(allowed)}")
    log.info("loaded %d dictionary entries from %s", len(entries), source)
    return DictionaryIndex(entries, gram_size, threshold, max_window_tokens)


def candidate_spans(title: str, max_window_tokens: int) -> list[tuple[int, int]]:
    tokens = [m.span() for m in TOKEN_RE.finditer(title)]
    spans = []
    for i in range(len(tokens)):
        for j in range(i, min(i + max_window_tokens, len(tokens))):
            spans.append((tokens[i][0], tokens[j][1]))
    return spans


def match_sort_key(m: ConceptMatch):
    return (m.start, -m.end, m.cui, -m.similarity, m.term)


def match_title(index: DictionaryIndex, title: str) -> list[ConceptMatch]:
    """All (span, entry) matches at or above the index threshold."""
    out = []
    for start, end in candidate_spans(title, index.max_window_tokens):
        text = title[start:end]
        for i, sim in index.lookup(text):
            e = index.entries[i]
            out.append(ConceptMatch(start, end, text, e.cui, e.preferred_term, sim, e.tui, e.term))
    out.sort(key=match_sort_key)
    return out


def drop_overlapping(matches: Sequence[ConceptMatch], start: int, end: int) -> list[ConceptMatch]:
    """Remove matches intersecting ``[start, end)``, e.g. the cue phrase."""
    return [m for m in matches if m.end <= start or m.start >= end]


def winner_key(m: ConceptMatch):
    # longest span, then highest similarity, then lowest CUI number; the
    # trailing fields only make the order total for permutation invariance
    return (-m.length, -m.similarity, cui_number(m.cui), m.start, m.term, m.tui)


def group_and_disambiguate(matches: Iterable[ConceptMatch]) -> list[MatchGroup]:
    ordered = sorted(matches, key=lambda m: (m.start, m.end))
    clusters: list[list[ConceptMatch]] = []
    reach = -1
    for m in ordered:
        if clusters and m.start < reach:
            clusters[-1].append(m)
            reach = max(reach, m.end)
        else:
            clusters.append([m])
            reach = m.end
    groups = []
    for cluster in clusters:
        winner = min(cluster, key=winner_key)
        groups.append(MatchGroup(
            winner,
            min(m.start for m in cluster),
            max(m.end for m in cluster),
            tuple(sorted(cluster, key=match_sort_key)),
        ))
    return groups

