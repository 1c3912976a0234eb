import json

import pytest
import yaml

from misdx.cli import main

OUTPUTS = ["edges.tsv", "nodes.tsv", "report.json", "graph.dot", "graph.graphml", "rejects.tsv",
           "pairs.tsv", "top_sources.tsv", "top_destinations.tsv"]


def fixture_args(e2e, out, *extra):
    return ["--baseline", str(e2e / "baseline"), "--dictionary", str(e2e / "dictionary.tsv"),
            "--relations", str(e2e / "relations.tsv"), "--out", str(out), *extra]


def snapshot(out):
    return {name: (out / name).read_bytes() for name in OUTPUTS}


def test_run_writes_everything(e2e, tmp_path):
    assert main(["run", *fixture_args(e2e, tmp_path)]) == 0
    snap = snapshot(tmp_path)
    assert main(["run", *fixture_args(e2e, tmp_path)]) == 0
    assert snapshot(tmp_path) == snap


def test_stagewise_matches_single_shot(e2e, tmp_path):
    single, staged = tmp_path / "single", tmp_path / "staged"
    assert main(["run", *fixture_args(e2e, single)]) == 0
    for stage in ("filter", "extract", "graph"):
        assert main([stage, *fixture_args(e2e, staged)]) == 0
    assert snapshot(staged) == snapshot(single)


def test_missing_dictionary_is_config_error(e2e, tmp_path, capsys):
    code = main(["run", "--baseline", str(tmp_path / "nope"), "--dictionary", str(tmp_path / "none.tsv"),
                 "--out", str(tmp_path / "o")])
    assert code == 2
    assert "dictionary" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_fetch_without_key_is_config_error(e2e, tmp_path, monkeypatch):
    monkeypatch.delenv("UMLS_API_KEY", raising=False)
    args = ["--baseline", str(e2e / "baseline"), "--dictionary", str(e2e / "dictionary.tsv"),
            "--fetch-relations", "--out", str(tmp_path)]
    assert main(["run", *args]) == 2


@pytest.mark.parametrize("extra", [["--threshold", "0"], ["--threshold", "1.2"], ["--workers", "0"]])
def test_invalid_flags(e2e, tmp_path, extra):
    assert main(["run", *fixture_args(e2e, tmp_path, *extra)]) == 2


def test_config_file_and_flag_precedence(e2e, tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text(yaml.safe_dump({
        "baseline": str(e2e / "baseline"), "dictionary": str(e2e / "dictionary.tsv"),
        "similarity_threshold": 0.9, "phrases": ["masquerading as"], "out": str(tmp_path / "o"),
    }))
    assert main(["run", "--config", str(cfg), "--threshold", "0.7"]) == 0
    report = json.loads((tmp_path / "o" / "report.json").read_text())
    assert report["config_echo"]["similarity_threshold"] == 0.7
    assert report["config_echo"]["phrases"] == ["masquerading as"]
    assert report["config_echo"]["relations"] is None
    assert report["titles_with_cue"] == 5


def test_unknown_config_key(tmp_path):
    cfg = tmp_path / "cfg.yaml"
    cfg.write_text("thresold: 0.5\n")
    assert main(["run", "--config", str(cfg)]) == 2


def test_broken_xml_fails_run(e2e, tmp_path):
    bad = tmp_path / "bad.xml"
    bad.write_text("<PubmedArticleSet><PubmedArticle></PubmedArticleSet>")
    args = ["--baseline", str(bad), "--dictionary", str(e2e / "dictionary.tsv"), "--out", str(tmp_path / "o")]
    assert main(["run", *args]) == 1


def test_phrases_flag(e2e, tmp_path):
    assert main(["run", *fixture_args(e2e, tmp_path, "--phrases", "misdiagnosed in")]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["titles_with_cue"] == 1
    assert report["rejection_breakdown"]["both_same_side"] == 1


def test_fetch_relations_served_from_cache(e2e, tmp_path, monkeypatch):
    monkeypatch.delenv("UMLS_API_KEY", raising=False)
    extracted = ["C0001261", "C0006826", "C0007097", "C0007642", "C0010709", "C0024299", "C0027651", "C0041296"]
    cache = {c: [] for c in extracted}
    cache["C0024299"] = [["C0006826", "PAR", "C0024299"]]
    cache["C0010709"] = [["C0027651", "SYN", "C0010709"]]
    cache_path = tmp_path / "cache.json"
    cache_path.write_text(json.dumps(cache))
    out = tmp_path / "o"
    args = ["--baseline", str(e2e / "baseline"), "--dictionary", str(e2e / "dictionary.tsv"),
            "--fetch-relations", "--relations-cache", str(cache_path), "--out", str(out)]
    assert main(["run", *args]) == 0
    # same relations as the committed file, so the same graph
    assert (out / "edges.tsv").read_bytes() == (e2e / "expected" / "edges.tsv").read_bytes()
    assert (out / "relations.tsv").read_text().splitlines() == [
        "C0027651\tSYN\tC0010709", "C0006826\tPAR\tC0024299"]
