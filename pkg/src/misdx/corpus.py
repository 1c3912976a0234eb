"""Streaming reader for MEDLINE/PubMed baseline XML.

Records are pulled out with a push parser (expat) fed in fixed-size chunks,
so memory stays bounded by the chunk size plus the largest record no matter
how large the baseline file is.
"""

from __future__ import annotations

import gzip
import io
import os
import re
from dataclasses import dataclass, fields
from typing import BinaryIO, Iterator, Union
from xml.parsers import expat

GZIP_MAGIC = b"\x1f\x8b"
CHUNK_SIZE = 1 << 16

_WS = re.compile(r"\s+")

_RECORD = "PubmedArticle"
_PMID_PATH = ("PubmedArticle", "MedlineCitation", "PMID")
_TITLE_PATH = ("PubmedArticle", "MedlineCitation", "Article", "ArticleTitle")


class CorpusParseError(ValueError):
    """The byte stream is not well-formed XML."""

    def __init__(self, message: str, byte_offset: int, line: int, column: int, source: str = "<stream>"):
        super().__init__(f"{source}: {message} at byte offset {byte_offset} (line {line}, column {column})")
        self.byte_offset = byte_offset
        self.line = line
        self.column = column
        self.source = source


@dataclass(frozen=True)
class Citation:
    pmid: str
    title: str


@dataclass
class CorpusStats:
    files_read: int = 0
    citations_scanned: int = 0
    records_skipped_malformed: int = 0

    def merge(self, other: "CorpusStats") -> "CorpusStats":
        return CorpusStats(*(getattr(self, f.name) + getattr(other, f.name) for f in fields(self)))


def clean_text(text: str) -> str:
    return _WS.sub(" ", text).strip()


class _RecordCollector:
    """Expat handlers tracking the element path and the two fields we keep."""

    def __init__(self, stats: CorpusStats):
        self.stats = stats
        self.stack: list[str] = []
        self.depth_of_record = -1
        self.pmid: list[str] | None = None
        self.title: list[str] | None = None
        self.in_pmid = False
        self.title_depth = -1
        self.ready: list[Citation] = []

    def _rel_path(self) -> tuple[str, ...]:
        return tuple(self.stack[self.depth_of_record:])

    def start(self, name: str, attrs) -> None:
        self.stack.append(name)
        if name == _RECORD and self.depth_of_record < 0:
            self.depth_of_record = len(self.stack) - 1
            self.pmid = None
            self.title = None
            return
        if self.depth_of_record < 0:
            return
        path = self._rel_path()
        if path == _PMID_PATH and self.pmid is None:
            self.pmid = []
            self.in_pmid = True
        elif path == _TITLE_PATH and self.title is None:
            self.title = []
            self.title_depth = len(self.stack)

    def end(self, name: str) -> None:
        if self.depth_of_record >= 0:
            if self.in_pmid and self._rel_path() == _PMID_PATH:
                self.in_pmid = False
            elif self.title_depth == len(self.stack):
                self.title_depth = -1
            elif len(self.stack) - 1 == self.depth_of_record:
                self._finish_record()
        self.stack.pop()

    def chars(self, data: str) -> None:
        if self.in_pmid:
            self.pmid.append(data)
        elif self.title_depth >= 0:
            # nested markup (<i>, <sup>, ...) contributes its text only
            self.title.append(data)

    def _finish_record(self) -> None:
        self.depth_of_record = -1
        self.stats.citations_scanned += 1
        pmid = "".join(self.pmid).strip() if self.pmid is not None else ""
        title = clean_text("".join(self.title)) if self.title is not None else ""
        if not pmid.isdigit() or not pmid.isascii() or not title:
            self.stats.records_skipped_malformed += 1
            return
        self.ready.append(Citation(pmid, title))


class _Prefixed(io.RawIOBase):
    """Re-attach bytes already consumed from a non-peekable stream."""

    def __init__(self, head: bytes, rest: BinaryIO):
        self._head = head
        self._rest = rest

    def readable(self) -> bool:
        return True

    def read(self, size: int = -1) -> bytes:
        if self._head:
            if size < 0:
                out, self._head = self._head, b""
                return out + self._rest.read()
            out, self._head = self._head[:size], self._head[size:]
            return out + self._rest.read(size - len(out)) if len(out) < size else out
        return self._rest.read(size)

    def close(self) -> None:
        # the caller owns the wrapped stream
        pass


def _open(source: Union[str, os.PathLike, BinaryIO], compressed: bool | None) -> tuple[BinaryIO, list]:
    """Return a decompressed byte stream plus the handles this module owns."""
    owned: list = []
    if isinstance(source, (str, os.PathLike)):
        fh: BinaryIO = open(source, "rb")
        owned.append(fh)
    else:
        fh = source
    if compressed is None:
        if hasattr(fh, "peek"):
            head = fh.peek(2)[:2]
        else:
            head = fh.read(2)
            fh = _Prefixed(head, fh)  # type: ignore[assignment]
        compressed = head == GZIP_MAGIC
    if compressed:
        fh = gzip.GzipFile(fileobj=fh)  # type: ignore[assignment]
        owned.append(fh)
    return fh, owned


def stream_citations(
    source: Union[str, os.PathLike, BinaryIO],
    compressed: bool | None = None,
    stats: CorpusStats | None = None,
) -> Iterator[Citation]:
    """Yield citations from one MEDLINE XML file or byte stream.

    ``compressed=None`` sniffs the gzip magic bytes. Counters are accumulated
    into ``stats`` as the stream is consumed; records lacking a PMID or a
    title are counted as malformed and skipped.
    """
    if stats is None:
        stats = CorpusStats()
    name = os.fspath(source) if isinstance(source, (str, os.PathLike)) else "<stream>"
    raw, owned = _open(source, compressed)
    collector = _RecordCollector(stats)
    parser = expat.ParserCreate()
    parser.buffer_text = True
    parser.StartElementHandler = collector.start
    parser.EndElementHandler = collector.end
    parser.CharacterDataHandler = collector.chars
    try:
        while True:
            chunk = raw.read(CHUNK_SIZE)
            try:
                parser.Parse(chunk, not chunk)
            except expat.ExpatError as exc:
                raise CorpusParseError(
                    expat.ErrorString(exc.code), parser.ErrorByteIndex,
                    exc.lineno, exc.offset, name,
                ) from None
            if collector.ready:
                yield from collector.ready
                collector.ready = []
            if not chunk:
                break
        stats.files_read += 1
    finally:
        for fh in reversed(owned):
            fh.close()
