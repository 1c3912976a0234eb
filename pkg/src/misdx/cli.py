"""Command-line entry point: ``misdx {filter,extract,graph,run}``."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from typing import Optional, Sequence

import yaml

from .corpus import CorpusParseError
from .pipeline import ConfigError, PipelineConfig, run_extract, run_filter, run_graph, run_pipeline

log = logging.getLogger("misdx")


def _csv(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML/JSON file with PipelineConfig keys; flags override it")
    common.add_argument("--baseline", nargs="+", metavar="PATH", help="MEDLINE XML files or directories")
    common.add_argument("--dictionary", help="cui<TAB>tui<TAB>term<TAB>preferred_term file")
    rel = common.add_mutually_exclusive_group()
    rel.add_argument("--relations", help="cui_a<TAB>rel<TAB>cui_b file")
    rel.add_argument("--fetch-relations", action="store_true", default=None,
                     help="query the UMLS REST API (needs UMLS_API_KEY)")
    common.add_argument("--relations-cache", help="JSON cache for fetched relations")
    common.add_argument("--phrases", type=_csv, help="comma-separated cue phrases")
    common.add_argument("--threshold", type=float, dest="similarity_threshold")
    common.add_argument("--gram", type=int, dest="gram_size")
    common.add_argument("--window", type=int, dest="max_window_tokens")
    common.add_argument("--tuis", type=_csv, dest="allowed_tuis", help="comma-separated semantic types")
    common.add_argument("--synonyms-first", action="store_true", default=None,
                        help="collapse synonyms before parent/child relations")
    common.add_argument("--top-k", type=int, dest="top_k")
    common.add_argument("--out", help="output directory")
    common.add_argument("--workers", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="misdx", description="Mine misdiagnosis pairs from MEDLINE titles.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("filter", parents=[common], help="find titles containing a cue phrase")
    sub.add_parser("extract", parents=[common], help="match concepts and select pairs from cue titles")
    sub.add_parser("graph", parents=[common], help="canonicalize pairs and write graph outputs")
    sub.add_parser("run", parents=[common], help="all stages in one pass")
    return parser


def make_config(args: argparse.Namespace) -> PipelineConfig:
    values: dict = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            values.update(yaml.safe_load(fh) or {})
    known = {f.name for f in dataclasses.fields(PipelineConfig)}
    unknown = set(values) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for name in known:
        flag = getattr(args, name, None)
        if flag is not None:
            values[name] = flag
    if isinstance(values.get("baseline"), str):
        values["baseline"] = [values["baseline"]]
    return PipelineConfig(**values)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        config = make_config(args)
        config.validate(args.command)
        if args.command == "run":
            report = run_pipeline(config)
        elif args.command == "filter":
            run_filter(config)
            return 0
        elif args.command == "extract":
            run_extract(config)
            return 0
        else:
            report = run_graph(config)
    except ConfigError as exc:
        print(f"misdx: config error: {exc}", file=sys.stderr)
        return 2
    except (OSError, CorpusParseError, ValueError) as exc:
        print(f"misdx: {exc}", file=sys.stderr)
        return 1
    log.info(
        "%d pairs from %d cue titles; %d nodes, %d edges",
        report.pairs_extracted, report.titles_with_cue, report.node_count, report.edge_count,
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
