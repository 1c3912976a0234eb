"""End-to-end pipeline and its checkpointable stages.

Stages exchange data through TSV/JSON files in the output directory:

    filter   baseline XML  -> cue_titles.tsv, filter_stats.json
    extract  cue titles    -> pairs.tsv, rejects.tsv, extract_stats.json
    graph    pairs         -> edges.tsv, nodes.tsv, graph.dot, graph.graphml, report.json

``run_pipeline`` chains the three in memory and writes every file.
"""

from __future__ import annotations

import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import export
from .canonical import RelationRow, apply_map, build_canonical_map, first_appearances, load_relations, write_relations
from .corpus import Citation, CorpusStats, stream_citations
from .cues import DEFAULT_PHRASES, CueHit, find_cue
from .graph import MisdxGraph, build_graph
from .matcher import (
    DEFAULT_GRAM_SIZE, DEFAULT_THRESHOLD, DEFAULT_TUIS, DEFAULT_WINDOW,
    DictionaryIndex, drop_overlapping, group_and_disambiguate, load_dictionary, match_title,
)
from .pairs import REJECTION_REASONS, RawPair, extract_pair
from .umls_client import API_KEY_ENV, fetch_relations_remote

log = logging.getLogger(__name__)

CUE_TITLES = "cue_titles.tsv"
FILTER_STATS = "filter_stats.json"
PAIRS = "pairs.tsv"
REJECTS = "rejects.tsv"
EXTRACT_STATS = "extract_stats.json"


class ConfigError(ValueError):
    pass


@dataclass
class PipelineConfig:
    baseline: list[str] = field(default_factory=list)
    dictionary: Optional[str] = None
    relations: Optional[str] = None
    fetch_relations: bool = False
    relations_cache: Optional[str] = None
    phrases: list[str] = field(default_factory=lambda: list(DEFAULT_PHRASES))
    similarity_threshold: float = DEFAULT_THRESHOLD
    gram_size: int = DEFAULT_GRAM_SIZE
    max_window_tokens: int = DEFAULT_WINDOW
    allowed_tuis: list[str] = field(default_factory=lambda: sorted(DEFAULT_TUIS))
    synonyms_first: bool = False
    top_k: int = 5
    out: str = "out"
    workers: int = 1

    def validate(self, stage: str = "run") -> None:
        if not 0 < self.similarity_threshold <= 1:
            raise ConfigError(f"threshold must be in (0, 1], got {self.similarity_threshold}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.gram_size < 2:
            raise ConfigError("gram size must be >= 2")
        if self.max_window_tokens < 1:
            raise ConfigError("window must be >= 1")
        if not self.phrases or any(not p.strip() for p in self.phrases):
            raise ConfigError("phrases must be non-empty")
        if stage in ("run", "filter") and not self.baseline:
            raise ConfigError("at least one --baseline path is required")
        if stage in ("run", "extract"):
            if not self.dictionary:
                raise ConfigError("--dictionary is required")
            if not os.path.isfile(self.dictionary):
                raise ConfigError(f"dictionary not found: {self.dictionary}")
        if stage in ("run", "graph"):
            if self.relations and self.fetch_relations:
                raise ConfigError("--relations and --fetch-relations are mutually exclusive")
            if self.relations and not os.path.isfile(self.relations):
                raise ConfigError(f"relations file not found: {self.relations}")
            if self.fetch_relations and not os.environ.get(API_KEY_ENV) and not self._cache_complete():
                raise ConfigError(f"--fetch-relations needs {API_KEY_ENV} in the environment")

    def _cache_complete(self) -> bool:
        # a supplied cache may cover every CUI, in which case no key is needed
        return bool(self.relations_cache and os.path.isfile(self.relations_cache))

    def filter_echo(self) -> dict:
        return {"baseline": [os.path.basename(p) for p in self.baseline], "phrases": list(self.phrases)}

    def extract_echo(self) -> dict:
        return {
            "dictionary": os.path.basename(self.dictionary) if self.dictionary else None,
            "allowed_tuis": sorted(self.allowed_tuis),
            "similarity_threshold": self.similarity_threshold,
            "gram_size": self.gram_size,
            "max_window_tokens": self.max_window_tokens,
        }

    def graph_echo(self) -> dict:
        if self.fetch_relations:
            relations = "remote"
        else:
            relations = os.path.basename(self.relations) if self.relations else None
        return {"relations": relations, "synonyms_first": self.synonyms_first, "top_k": self.top_k}


@dataclass(frozen=True)
class CueTitle:
    citation: Citation
    cue: CueHit


def resolve_inputs(paths: Sequence[str]) -> list[str]:
    """Expand directories to their sorted ``*.xml`` / ``*.xml.gz`` files."""
    files: list[str] = []
    for p in paths:
        path = Path(p)
        if path.is_dir():
            files.extend(str(f) for f in sorted(path.iterdir()) if f.name.endswith((".xml", ".xml.gz")))
        elif path.exists():
            files.append(str(path))
        else:
            raise FileNotFoundError(f"baseline input not found: {p}")
    return files


def scan_file(path: str, phrases: Sequence[str]) -> tuple[CorpusStats, list[CueTitle]]:
    stats = CorpusStats()
    hits = []
    for cit in stream_citations(path, stats=stats):
        cue = find_cue(cit.title, phrases)
        if cue is not None:
            hits.append(CueTitle(cit, cue))
    return stats, hits


def filter_corpus(files: Sequence[str], phrases: Sequence[str], workers: int = 1) -> tuple[CorpusStats, list[CueTitle]]:
    """Scan files (in parallel when ``workers > 1``), keeping input order."""
    if workers > 1 and len(files) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(files))) as pool:
            results = list(pool.map(scan_file, files, [list(phrases)] * len(files)))
    else:
        results = [scan_file(f, phrases) for f in files]
    stats = CorpusStats()
    hits: list[CueTitle] = []
    for s, h in results:
        stats = stats.merge(s)
        hits.extend(h)
    return stats, hits


def extract_pairs(
    cue_titles: Sequence[CueTitle], index: DictionaryIndex
) -> tuple[list[RawPair], list[tuple[str, str]], dict[str, int]]:
    pairs: list[RawPair] = []
    rejects: list[tuple[str, str]] = []
    breakdown = dict.fromkeys(REJECTION_REASONS, 0)
    for ct in cue_titles:
        matches = drop_overlapping(match_title(index, ct.citation.title), ct.cue.start, ct.cue.end)
        pair, reason = extract_pair(ct.citation, ct.cue, group_and_disambiguate(matches))
        if pair is not None:
            pairs.append(pair)
        else:
            rejects.append((ct.citation.pmid, reason))
            breakdown[reason] += 1
    return pairs, rejects, breakdown


def gather_relations(config: PipelineConfig, cuis: set[str]) -> list[RelationRow]:
    if config.relations:
        return load_relations(config.relations)
    if config.fetch_relations:
        cache = config.relations_cache or os.path.join(config.out, "relations_cache.json")
        result = fetch_relations_remote(cuis, cache_path=cache)
        if result.errors:
            log.warning("relations unavailable for %d CUIs", len(result.errors))
        write_relations(result.rows, os.path.join(config.out, "relations.tsv"))
        return result.rows
    return []


def assemble_graph(
    pairs: Sequence[RawPair], relations: Sequence[RelationRow], labels: dict[str, str], synonyms_first: bool = False
) -> MisdxGraph:
    first = first_appearances(pairs)
    cmap = build_canonical_map(first.keys(), first, relations, synonyms_first)
    return build_graph((apply_map(cmap, p) for p in pairs), labels)


# --- stage drivers -----------------------------------------------------------

def _out(config: PipelineConfig, name: str) -> str:
    return os.path.join(config.out, name)


def _write_json(path: str, obj: dict) -> None:
    export.save(path, json.dumps(obj, indent=2, ensure_ascii=False) + "\n")


def run_filter(config: PipelineConfig) -> tuple[CorpusStats, list[CueTitle]]:
    os.makedirs(config.out, exist_ok=True)
    stats, hits = filter_corpus(resolve_inputs(config.baseline), config.phrases, config.workers)
    export.save(_out(config, CUE_TITLES), export._tsv(
        (h.citation.pmid, h.cue.phrase, h.cue.start, h.cue.end, h.citation.title) for h in hits
    ))
    _write_json(_out(config, FILTER_STATS), {
        "files_read": stats.files_read,
        "citations_scanned": stats.citations_scanned,
        "records_skipped_malformed": stats.records_skipped_malformed,
        "titles_with_cue": len(hits),
        "config": config.filter_echo(),
    })
    log.info("scanned %d citations, %d with a cue phrase", stats.citations_scanned, len(hits))
    return stats, hits


def read_cue_titles(path: str) -> list[CueTitle]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            pmid, phrase, start, end, title = line.rstrip("\n").split("\t")
            out.append(CueTitle(Citation(pmid, title), CueHit(phrase, int(start), int(end))))
    return out


def read_pairs(path: str) -> list[RawPair]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            pmid, src, dst, title = line.rstrip("\n").split("\t")
            out.append(RawPair(src, dst, pmid, title))
    return out


def load_index(config: PipelineConfig) -> DictionaryIndex:
    return load_dictionary(
        config.dictionary, config.allowed_tuis, config.gram_size,
        config.similarity_threshold, config.max_window_tokens,
    )


def _labels_for(labels: dict[str, str], pairs: Sequence[RawPair]) -> dict[str, str]:
    cuis = {c for p in pairs for c in (p.source_cui, p.dest_cui)}
    return {c: labels[c] for c in sorted(cuis) if c in labels}


def run_extract(
    config: PipelineConfig, cue_titles: Optional[list[CueTitle]] = None, index: Optional[DictionaryIndex] = None
) -> list[RawPair]:
    os.makedirs(config.out, exist_ok=True)
    if cue_titles is None:
        cue_titles = read_cue_titles(_out(config, CUE_TITLES))
    index = index or load_index(config)
    pairs, rejects, breakdown = extract_pairs(cue_titles, index)
    export.save(_out(config, PAIRS), export.write_pairs(pairs))
    export.save(_out(config, REJECTS), export.write_rejects(rejects))
    _write_json(_out(config, EXTRACT_STATS), {
        "titles_with_cue": len(cue_titles),
        "titles_selected": len(pairs),
        "rejection_breakdown": breakdown,
        "labels": _labels_for(index.labels(), pairs),
        "config": config.extract_echo(),
    })
    log.info("selected %d of %d cue titles", len(pairs), len(cue_titles))
    return pairs


def _read_json(path: str) -> dict:
    if os.path.exists(path):
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    return {}


def run_graph(
    config: PipelineConfig, pairs: Optional[list[RawPair]] = None, labels: Optional[dict[str, str]] = None
) -> export.RunReport:
    os.makedirs(config.out, exist_ok=True)
    if pairs is None:
        pairs = read_pairs(_out(config, PAIRS))
    fstats = _read_json(_out(config, FILTER_STATS))
    xstats = _read_json(_out(config, EXTRACT_STATS))
    if labels is None:
        labels = xstats.get("labels", {})

    relations = gather_relations(config, {c for p in pairs for c in (p.source_cui, p.dest_cui)})
    graph = assemble_graph(pairs, relations, labels, config.synonyms_first)

    breakdown = dict.fromkeys(REJECTION_REASONS, 0)
    breakdown.update(xstats.get("rejection_breakdown", {}))
    report = export.RunReport(
        files_read=fstats.get("files_read", 0),
        citations_scanned=fstats.get("citations_scanned", 0),
        records_skipped_malformed=fstats.get("records_skipped_malformed", 0),
        titles_with_cue=xstats.get("titles_with_cue", len(pairs)),
        titles_selected=len(pairs),
        pairs_extracted=len(pairs),
        self_loops_dropped=graph.self_loops_dropped,
        node_count=len(graph.nodes),
        edge_count=len(graph.edges),
        rejection_breakdown=breakdown,
        config_echo={
            **fstats.get("config", {}), **xstats.get("config", {}), **config.graph_echo(),
        },
    )
    report.check()
    if graph.retained_pairs != report.pairs_extracted - report.self_loops_dropped:
        raise AssertionError("edge pair counts do not add up to retained pairs")

    export.save(_out(config, "edges.tsv"), export.write_edge_table(graph))
    export.save(_out(config, "nodes.tsv"), export.write_node_table(graph))
    export.save(_out(config, "top_sources.tsv"), export.write_top_sources(graph, config.top_k))
    export.save(_out(config, "top_destinations.tsv"), export.write_top_destinations(graph, config.top_k))
    export.save(_out(config, "graph.dot"), export.write_dot(graph))
    export.save(_out(config, "graph.graphml"), export.write_graphml(graph))
    export.save(_out(config, "report.json"), export.write_report(report))
    return report


def run_pipeline(config: PipelineConfig) -> export.RunReport:
    config.validate("run")
    index = load_index(config)  # fail on a bad dictionary before touching the corpus
    _, hits = run_filter(config)
    pairs = run_extract(config, hits, index)
    return run_graph(config, pairs, index.labels())
