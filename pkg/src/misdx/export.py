"""Deterministic writers for the graph, tables and run report."""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from typing import Any, Iterable
from xml.sax.saxutils import escape, quoteattr

from .graph import MisdxGraph, reverse_pair_report, round4, top_destinations, top_sources
from .pairs import REJECTION_REASONS, RawPair

EDGE_HEADER = ("source_cui", "source_label", "dest_cui", "dest_label", "pair_count", "source_frequency", "weight")
NODE_HEADER = (
    "cui", "label", "source_frequency", "destination_frequency",
    "out_degree", "in_degree", "out_degree_centrality",
)


@dataclass
class RunReport:
    files_read: int = 0
    citations_scanned: int = 0
    records_skipped_malformed: int = 0
    titles_with_cue: int = 0
    titles_selected: int = 0
    pairs_extracted: int = 0
    self_loops_dropped: int = 0
    node_count: int = 0
    edge_count: int = 0
    rejection_breakdown: dict[str, int] = field(default_factory=lambda: dict.fromkeys(REJECTION_REASONS, 0))
    config_echo: dict[str, Any] = field(default_factory=dict)

    def check(self) -> None:
        """Assert the bookkeeping identities between counters."""
        if self.titles_selected != self.pairs_extracted:
            raise AssertionError("titles_selected != pairs_extracted")
        if self.titles_with_cue != self.titles_selected + sum(self.rejection_breakdown.values()):
            raise AssertionError("titles_with_cue != selected + rejected")


def _tsv(rows: Iterable[Iterable[Any]]) -> str:
    return "".join("\t".join(str(c) for c in row) + "\n" for row in rows)


def _clean(text: str) -> str:
    return " ".join(text.split())


def write_edge_table(graph: MisdxGraph) -> str:
    edges = sorted(graph.edges.values(), key=lambda e: (e.source_cui, -e.weight, e.dest_cui))
    rows = [EDGE_HEADER]
    for e in edges:
        rows.append((
            e.source_cui, _clean(graph.nodes[e.source_cui].label),
            e.dest_cui, _clean(graph.nodes[e.dest_cui].label),
            e.pair_count, graph.nodes[e.source_cui].source_frequency, round4(e.weight),
        ))
    return _tsv(rows)


def write_node_table(graph: MisdxGraph) -> str:
    rows = [NODE_HEADER]
    for cui in sorted(graph.nodes):
        n = graph.nodes[cui]
        rows.append((
            n.cui, _clean(n.label), n.source_frequency, n.destination_frequency,
            n.out_degree, n.in_degree, round4(n.out_degree_centrality),
        ))
    return _tsv(rows)


def write_top_sources(graph: MisdxGraph, k: int = 5) -> str:
    reverse = {src: rev for src, _, rev in reverse_pair_report(graph, k)}
    rows = [("rank", "cui", "label", "source_frequency", "out_degree",
             "top_dest_cui", "top_dest_label", "weight", "reverse_weight")]
    for i, (n, e) in enumerate(top_sources(graph, k), 1):
        rev = reverse[n.cui]
        rows.append((i, n.cui, _clean(n.label), n.source_frequency, n.out_degree, e.dest_cui,
                     _clean(graph.nodes[e.dest_cui].label), round4(e.weight),
                     "" if rev is None else round4(rev)))
    return _tsv(rows)


def write_top_destinations(graph: MisdxGraph, k: int = 5) -> str:
    rows = [("rank", "cui", "label", "destination_frequency", "in_degree",
             "top_source_cui", "top_source_label", "share")]
    for i, (n, e, share) in enumerate(top_destinations(graph, k), 1):
        rows.append((i, n.cui, _clean(n.label), n.destination_frequency, n.in_degree, e.source_cui,
                     _clean(graph.nodes[e.source_cui].label), round4(share)))
    return _tsv(rows)


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def write_dot(graph: MisdxGraph) -> str:
    lines = ["digraph misdiagnosis {"]
    for cui in sorted(graph.nodes):
        n = graph.nodes[cui]
        lines.append(
            f"  {_dot_quote(cui)} [label={_dot_quote(n.label)}, "
            f"out_degree_centrality={round4(n.out_degree_centrality)}];"
        )
    for (s, d), e in sorted(graph.edges.items()):
        lines.append(f"  {_dot_quote(s)} -> {_dot_quote(d)} [weight={round4(e.weight)}, pair_count={e.pair_count}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


_NODE_KEYS = (
    ("label", "string"), ("source_frequency", "int"), ("destination_frequency", "int"),
    ("out_degree", "int"), ("in_degree", "int"), ("out_degree_centrality", "double"),
)
_EDGE_KEYS = (("weight", "double"), ("pair_count", "int"))


def write_graphml(graph: MisdxGraph) -> str:
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns" '
        'xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance" '
        'xsi:schemaLocation="http://graphml.graphdrawing.org/xmlns '
        'http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd">',
    ]
    for name, typ in _NODE_KEYS:
        out.append(f'  <key id="{name}" for="node" attr.name="{name}" attr.type="{typ}"/>')
    for name, typ in _EDGE_KEYS:
        out.append(f'  <key id="{name}" for="edge" attr.name="{name}" attr.type="{typ}"/>')
    out.append('  <graph id="misdiagnosis" edgedefault="directed">')
    for cui in sorted(graph.nodes):
        n = graph.nodes[cui]
        values = {
            "label": escape(n.label),
            "source_frequency": n.source_frequency,
            "destination_frequency": n.destination_frequency,
            "out_degree": n.out_degree,
            "in_degree": n.in_degree,
            "out_degree_centrality": round4(n.out_degree_centrality),
        }
        out.append(f"    <node id={quoteattr(cui)}>")
        out.extend(f'      <data key="{k}">{values[k]}</data>' for k, _ in _NODE_KEYS)
        out.append("    </node>")
    for (s, d), e in sorted(graph.edges.items()):
        out.append(f"    <edge source={quoteattr(s)} target={quoteattr(d)}>")
        out.append(f'      <data key="weight">{round4(e.weight)}</data>')
        out.append(f'      <data key="pair_count">{e.pair_count}</data>')
        out.append("    </edge>")
    out.append("  </graph>")
    out.append("</graphml>")
    return "\n".join(out) + "\n"


def write_report(report: RunReport) -> str:
    return json.dumps(asdict(report), indent=2, ensure_ascii=False) + "\n"


def write_rejects(rejects: Iterable[tuple[str, str]]) -> str:
    return _tsv([("pmid", "reason"), *rejects])


def write_pairs(pairs: Iterable[RawPair]) -> str:
    return _tsv((p.pmid, p.source_cui, p.dest_cui, p.title) for p in pairs)


def save(path: str | os.PathLike, text: str) -> None:
    """Write UTF-8 text with LF line endings, atomically."""
    tmp = f"{os.fspath(path)}.tmp"
    with open(tmp, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)
    os.replace(tmp, path)
