"""Collapse extracted CUIs along parent/child and synonymy relations.

Relation rows read ``A REL B``:

* ``A PAR B`` / ``A RB B``: A is the parent (broader concept) of B
* ``A CHD B`` / ``A RN B``: A is a child (narrower concept) of B
* ``A SYN B`` / ``A RL B``: A and B are synonymous / alike

A child collapses onto its parent; chains collapse onto the topmost extracted
ancestor. Synonym components collapse onto the member that appeared first in
the selected titles.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Mapping

from .matcher import CUI_RE, cui_number
from .pairs import RawPair

PARENT_OF = frozenset({"PAR", "RB"})
CHILD_OF = frozenset({"CHD", "RN"})
SYNONYM = frozenset({"SYN", "RL"})
RELATION_CODES = PARENT_OF | CHILD_OF | SYNONYM


class RelationsError(ValueError):
    pass


class CanonicalizationError(KeyError):
    """A pair mentions a CUI the map was not built for."""


@dataclass(frozen=True)
class RelationRow:
    cui_a: str
    rel: str
    cui_b: str


@dataclass(frozen=True)
class CanonicalMap:
    mapping: Mapping[str, str]
    first_appearance: Mapping[str, int]

    def __getitem__(self, cui: str) -> str:
        return self.mapping[cui]


@dataclass(frozen=True)
class CanonicalPair:
    source_cui: str
    dest_cui: str
    pmid: str
    self_loop: bool = False


def load_relations(source: str | os.PathLike) -> list[RelationRow]:
    rows: list[RelationRow] = []
    seen: set[RelationRow] = set()
    with open(source, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.startswith("#"):
                continue
            cols = [c.strip() for c in line.split("\t")]
            if len(cols) != 3:
                raise RelationsError(f"{source}:{lineno}: expected 3 columns, got {len(cols)}")
            a, rel, b = cols
            if rel not in RELATION_CODES:
                raise RelationsError(f"{source}:{lineno}: unknown relation code {rel!r}")
            for cui in (a, b):
                if not CUI_RE.match(cui):
                    raise RelationsError(f"{source}:{lineno}: bad CUI {cui!r}")
            if a == b:
                continue
            row = RelationRow(a, rel, b)
            if row not in seen:
                seen.add(row)
                rows.append(row)
    return rows


def write_relations(rows: Iterable[RelationRow], path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for r in rows:
            fh.write(f"{r.cui_a}\t{r.rel}\t{r.cui_b}\n")


def _collapse_parents(nodes: set[str], edges: Iterable[tuple[str, str]]) -> dict[str, str]:
    """Map every node to its topmost ancestor; ``edges`` are (parent, child)."""
    parents: dict[str, set[str]] = {}
    for parent, child in edges:
        if parent != child:
            parents.setdefault(child, set()).add(parent)
    step = {c: min(ps, key=cui_number) for c, ps in parents.items()}

    resolved: dict[str, str] = {}
    for start in sorted(nodes, key=cui_number):
        path: list[str] = []
        pos: dict[str, int] = {}
        x = start
        while x not in resolved and x in step and x not in pos:
            pos[x] = len(path)
            path.append(x)
            x = step[x]
        if x in resolved:
            rep = resolved[x]
        elif x in pos:
            rep = min(path[pos[x]:], key=cui_number)
        else:
            rep = x
            resolved[x] = x
        for y in path:
            resolved[y] = rep
    return resolved


def _collapse_synonyms(
    nodes: set[str], edges: Iterable[tuple[str, str]], first_appearance: Mapping[str, int]
) -> dict[str, str]:
    parent = {n: n for n in nodes}

    def find(x: str) -> str:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    members: dict[str, list[str]] = {}
    for n in nodes:
        members.setdefault(find(n), []).append(n)
    out = {}
    for group in members.values():
        rep = min(group, key=lambda c: (first_appearance[c], cui_number(c)))
        for n in group:
            out[n] = rep
    return out


def build_canonical_map(
    extracted: Iterable[str],
    first_appearance: Mapping[str, int],
    relations: Iterable[RelationRow],
    synonyms_first: bool = False,
) -> CanonicalMap:
    """Build the total, idempotent CUI -> representative map.

    Only relations with both endpoints among ``extracted`` are used.
    """
    nodes = set(extracted)
    missing = nodes - first_appearance.keys()
    if missing:
        raise ValueError(f"no first appearance recorded for {sorted(missing)}")
    parent_edges: list[tuple[str, str]] = []
    syn_edges: list[tuple[str, str]] = []
    for r in relations:
        if r.cui_a not in nodes or r.cui_b not in nodes:
            continue
        if r.rel in PARENT_OF:
            parent_edges.append((r.cui_a, r.cui_b))
        elif r.rel in CHILD_OF:
            parent_edges.append((r.cui_b, r.cui_a))
        else:
            syn_edges.append((r.cui_a, r.cui_b))

    def collapse(kind: str, members: set[str], lift: Mapping[str, str]) -> dict[str, str]:
        if kind == "parents":
            return _collapse_parents(members, [(lift[p], lift[c]) for p, c in parent_edges])
        lifted = [(lift[a], lift[b]) for a, b in syn_edges if lift[a] != lift[b]]
        return _collapse_synonyms(members, lifted, first_appearance)

    order = ("synonyms", "parents") if synonyms_first else ("parents", "synonyms")
    identity = {n: n for n in nodes}
    first = collapse(order[0], nodes, identity)
    reps = set(first.values())
    second = collapse(order[1], reps, first)
    mapping = {n: second[first[n]] for n in nodes}
    # path compression; a no-op unless the two stages disagree on fixed points
    for n in nodes:
        target = mapping[n]
        while mapping[target] != target:
            target = mapping[target]
        mapping[n] = target
    return CanonicalMap(dict(sorted(mapping.items())), dict(first_appearance))


def apply_map(cmap: CanonicalMap, pair: RawPair) -> CanonicalPair:
    try:
        src, dst = cmap[pair.source_cui], cmap[pair.dest_cui]
    except KeyError as exc:
        raise CanonicalizationError(f"CUI {exc.args[0]} missing from canonical map") from None
    return CanonicalPair(src, dst, pair.pmid, src == dst)


def first_appearances(pairs: Iterable[RawPair]) -> dict[str, int]:
    """Position of each CUI's first mention over the selected-title stream.

    The source concept precedes the destination within a title, so the
    ordinal of pair ``i`` is ``2*i`` for its source and ``2*i + 1`` for its
    destination.
    """
    seen: dict[str, int] = {}
    for i, p in enumerate(pairs):
        seen.setdefault(p.source_cui, 2 * i)
        seen.setdefault(p.dest_cui, 2 * i + 1)
    return seen
