import gzip
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
E2E = FIXTURES / "e2e"


def medline_xml(records):
    """Build a PubmedArticleSet document; ``records`` are (pmid, title) with None meaning absent."""
    body = []
    for pmid, title in records:
        pmid_el = f'<PMID Version="1">{pmid}</PMID>' if pmid is not None else ""
        title_el = f"<ArticleTitle>{title}</ArticleTitle>" if title is not None else ""
        body.append(
            f"<PubmedArticle><MedlineCitation>{pmid_el}<Article>{title_el}</Article>"
            f"</MedlineCitation></PubmedArticle>\n"
        )
    return '<?xml version="1.0"?>\n<PubmedArticleSet>\n' + "".join(body) + "</PubmedArticleSet>\n"


def write_gz(path, text):
    with open(path, "wb") as fh, gzip.GzipFile(filename="", mode="wb", fileobj=fh, mtime=0) as gz:
        gz.write(text.encode("utf-8"))


@pytest.fixture
def e2e():
    return E2E


@pytest.fixture
def write_dictionary(tmp_path):
    def _write(rows, name="dict.tsv"):
        path = tmp_path / name
        path.write_text("".join("\t".join(r) + "\n" for r in rows), encoding="utf-8")
        return path
    return _write


_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, text): acceptance criterion covered by the test")


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is None or call.when not in ("setup", "call"):
        return
    number, text = marker.args
    prev = _criteria.get(number, (text, "PASS"))[1]
    if call.excinfo is not None:
        outcome = "SKIP" if call.excinfo.errisinstance(pytest.skip.Exception) else "FAIL"
    elif call.when == "call":
        outcome = prev
    else:
        return
    if prev == "FAIL":
        outcome = "FAIL"
    _criteria[number] = (text, outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        text, outcome = _criteria[number]
        terminalreporter.write_line(f"[{outcome}] criterion {number}: {text}")
