"""Aggregate canonical pairs into the directed misdiagnosis graph."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

from .canonical import CanonicalPair
from .matcher import cui_number


def round4(x: Fraction) -> str:
    """Render a non-negative rational to 4 decimals, rounding half up."""
    scaled = (x.numerator * 20000 + x.denominator) // (2 * x.denominator)
    return f"{scaled // 10000}.{scaled % 10000:04d}"


@dataclass(frozen=True)
class EdgeStat:
    source_cui: str
    dest_cui: str
    pair_count: int
    weight: Fraction


@dataclass(frozen=True)
class NodeStat:
    cui: str
    label: str
    source_frequency: int
    destination_frequency: int
    out_degree: int
    in_degree: int
    out_degree_centrality: Fraction


@dataclass
class MisdxGraph:
    nodes: dict[str, NodeStat] = field(default_factory=dict)
    edges: dict[tuple[str, str], EdgeStat] = field(default_factory=dict)
    self_loops_dropped: int = 0

    def out_edges(self, cui: str) -> list[EdgeStat]:
        return [e for (s, _), e in self.edges.items() if s == cui]

    def in_edges(self, cui: str) -> list[EdgeStat]:
        return [e for (_, d), e in self.edges.items() if d == cui]

    @property
    def retained_pairs(self) -> int:
        return sum(e.pair_count for e in self.edges.values())


def count_pairs(pairs: Iterable[CanonicalPair]) -> tuple[Counter, int]:
    """Edge counts plus dropped self-loops; shards merge by addition."""
    counts: Counter = Counter()
    loops = 0
    for p in pairs:
        if p.self_loop or p.source_cui == p.dest_cui:
            loops += 1
        else:
            counts[p.source_cui, p.dest_cui] += 1
    return counts, loops


def graph_from_counts(
    counts: Mapping[tuple[str, str], int], labels: Mapping[str, str], self_loops_dropped: int = 0
) -> MisdxGraph:
    src_freq: Counter = Counter()
    dst_freq: Counter = Counter()
    out_deg: Counter = Counter()
    in_deg: Counter = Counter()
    for (s, d), n in counts.items():
        src_freq[s] += n
        dst_freq[d] += n
        out_deg[s] += 1
        in_deg[d] += 1

    cuis = sorted(set(src_freq) | set(dst_freq))
    denom = len(cuis) - 1
    nodes = {
        c: NodeStat(
            c, labels.get(c, c), src_freq[c], dst_freq[c], out_deg[c], in_deg[c],
            Fraction(out_deg[c], denom) if denom > 0 else Fraction(0),
        )
        for c in cuis
    }
    edges = {
        (s, d): EdgeStat(s, d, n, Fraction(n, src_freq[s]))
        for (s, d), n in sorted(counts.items())
    }
    return MisdxGraph(nodes, edges, self_loops_dropped)


def build_graph(pairs: Iterable[CanonicalPair], labels: Optional[Mapping[str, str]] = None) -> MisdxGraph:
    counts, loops = count_pairs(pairs)
    return graph_from_counts(counts, labels or {}, loops)


def top_sources(graph: MisdxGraph, k: int) -> list[tuple[NodeStat, EdgeStat]]:
    """Most often misdiagnosed concepts, each with its heaviest out-edge."""
    if k < 1:
        raise ValueError("k must be at least 1")
    ranked = sorted(
        (n for n in graph.nodes.values() if n.source_frequency > 0),
        key=lambda n: (-n.source_frequency, cui_number(n.cui)),
    )[:k]
    return [
        (n, min(graph.out_edges(n.cui), key=lambda e: (-e.weight, -e.pair_count, cui_number(e.dest_cui))))
        for n in ranked
    ]


def top_destinations(graph: MisdxGraph, k: int) -> list[tuple[NodeStat, EdgeStat, Fraction]]:
    """Most common wrong diagnoses, each with its most frequent true diagnosis.

    The third element is that in-edge's share of the destination frequency.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    ranked = sorted(
        (n for n in graph.nodes.values() if n.destination_frequency > 0),
        key=lambda n: (-n.destination_frequency, cui_number(n.cui)),
    )[:k]
    rows = []
    for n in ranked:
        best = min(graph.in_edges(n.cui), key=lambda e: (-e.pair_count, cui_number(e.source_cui)))
        rows.append((n, best, Fraction(best.pair_count, n.destination_frequency)))
    return rows


def reverse_pair_report(graph: MisdxGraph, k: int) -> list[tuple[str, str, Optional[Fraction]]]:
    """For the top-k sources: (source, best destination, weight of the reverse edge or None)."""
    out = []
    for node, best in top_sources(graph, k):
        rev = graph.edges.get((best.dest_cui, node.cui))
        out.append((node.cui, best.dest_cui, rev.weight if rev else None))
    return out
