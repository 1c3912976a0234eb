import io
from xml.sax.saxutils import escape

import pytest
from hypothesis import given, settings, strategies as st

from misdx.corpus import Citation, CorpusParseError, CorpusStats, stream_citations

from .conftest import medline_xml, write_gz


def read(data, **kw):
    stats = CorpusStats()
    out = list(stream_citations(io.BytesIO(data), stats=stats, **kw))
    return out, stats


def test_single_record():
    xml = medline_xml([("123", "Tuberculosis misdiagnosed as carcinoma")]).encode()
    cits, stats = read(xml)
    assert cits == [Citation("123", "Tuberculosis misdiagnosed as carcinoma")]
    assert stats.citations_scanned == 1 and stats.files_read == 1


def test_empty_corpus():
    cits, stats = read(medline_xml([]).encode())
    assert cits == []
    assert stats.citations_scanned == 0


def test_missing_title_is_skipped_and_counted():
    records = [("1", "a"), ("2", "b"), ("3", None), ("4", "d"), ("5", "e")]
    cits, stats = read(medline_xml(records).encode())
    assert [c.pmid for c in cits] == ["1", "2", "4", "5"]
    assert stats.records_skipped_malformed == 1
    assert stats.citations_scanned == len(cits) + stats.records_skipped_malformed


@pytest.mark.parametrize("pmid,title", [(None, "x"), ("12a", "x"), ("7", "   "), ("", "x")])
def test_malformed_records(pmid, title):
    cits, stats = read(medline_xml([(pmid, title), ("9", "ok")]).encode())
    assert cits == [Citation("9", "ok")]
    assert stats.records_skipped_malformed == 1


def test_markup_entities_and_whitespace():
    xml = medline_xml([("5", "  <i>Mycobacterium</i>\n  tuberculosis &amp; <sup>2</sup>  cysts ")]).encode()
    (cit,), _ = read(xml)
    assert cit.title == "Mycobacterium tuberculosis & 2 cysts"


def test_nested_pmids_are_ignored():
    xml = (
        "<PubmedArticleSet><PubmedArticle><MedlineCitation><PMID>42</PMID><Article>"
        "<ArticleTitle>T</ArticleTitle></Article><CommentsCorrectionsList><CommentsCorrections>"
        "<PMID>999</PMID></CommentsCorrections></CommentsCorrectionsList></MedlineCitation>"
        "</PubmedArticle></PubmedArticleSet>"
    ).encode()
    assert read(xml)[0] == [Citation("42", "T")]


def test_gzip_sniffed_and_forced(tmp_path):
    text = medline_xml([("1", "one"), ("2", "two")])
    plain = tmp_path / "a.xml"
    plain.write_text(text)
    packed = tmp_path / "a.xml.gz"
    write_gz(packed, text)
    expected = [Citation("1", "one"), Citation("2", "two")]
    assert list(stream_citations(plain)) == expected
    assert list(stream_citations(packed)) == expected
    assert list(stream_citations(packed, compressed=True)) == expected
    assert list(stream_citations(io.BytesIO(packed.read_bytes()))) == expected


def test_caller_stream_left_open():
    buf = io.BytesIO(medline_xml([("1", "x")]).encode())
    list(stream_citations(buf))
    assert not buf.closed


def test_parse_error_reports_byte_offset():
    # '<PubmedArticleSet>' is 18 bytes and '<PubmedArticle>' 15: the bad end tag spans [33, 52)
    with pytest.raises(CorpusParseError) as info:
        read(b"<PubmedArticleSet><PubmedArticle></PubmedArticleSet>")
    assert 33 <= info.value.byte_offset < 52
    assert f"byte offset {info.value.byte_offset}" in str(info.value)


def test_unreadable_source(tmp_path):
    with pytest.raises(OSError):
        list(stream_citations(tmp_path / "missing.xml"))


def test_records_larger_than_chunk():
    long_title = "word " * 40000
    cits, _ = read(medline_xml([("1", long_title), ("2", "short")]).encode())
    assert cits[0].title == long_title.strip()
    assert cits[1].pmid == "2"


def test_stats_merge_is_fieldwise():
    assert CorpusStats(1, 2, 3).merge(CorpusStats(4, 5, 6)) == CorpusStats(5, 7, 9)


titles = st.text(st.characters(blacklist_categories=("Cs", "Cc")), min_size=1, max_size=40)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(1, 10**8), titles), max_size=8))
def test_round_trip_and_determinism(records):
    xml = medline_xml([(str(p), escape(t)) for p, t in records]).encode()
    first, stats = read(xml)
    second, _ = read(xml)
    assert first == second
    expected = [Citation(str(p), " ".join(t.split())) for p, t in records if t.split()]
    assert first == expected
    assert stats.citations_scanned == len(first) + stats.records_skipped_malformed
