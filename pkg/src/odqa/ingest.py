"""Streaming CSV ingest.

Reads RFC 4180 files (comma delimiter, double-quote quoting with quote
doubling, LF or CRLF line ends, UTF-8 with optional BOM) in bounded
memory. A single pass drives any number of row consumers, so every audit
check shares one read of the file. Rows reach consumers as plain lists of
cell strings; presence/missingness is decided by a shared classifier
rather than by wrapping every cell in an object, which keeps the per-cell
cost low enough for multi-gigabyte inputs.
"""

from __future__ import annotations

import csv
import logging
import os
from dataclasses import dataclass, field as dc_field
from pathlib import Path
from typing import Callable, Iterable, Mapping

from .findings import Finding, make_finding

log = logging.getLogger(__name__)

BOM = b"\xef\xbb\xbf"
_CHUNK = 1 << 20

# canonical missing-value kinds, in reporting order
MISSING_KINDS = ("empty", "whitespace", "NA", "N/A", "angle_NA", "null_literal")

_DEFAULT_TOKENS: dict[str, str] = {
    "NA": "NA",
    "N/A": "N/A",
    "<NA>": "angle_NA",
}

_WHITESPACE = " \t\r\n\x0b\x0c"


class MissingClassifier:
    """Maps raw cell text to a missing kind, or None for present values.

    Classification looks at the trimmed token: "" is empty, all-whitespace
    is whitespace, and the token table covers the textual sentinels. The
    null literal check is case-insensitive ("null", "NULL", "Null" all
    count); the other sentinels match exactly as the portal emits them.
    Extra tokens can be added from config, mapped to any canonical kind.
    """

    def __init__(self, extra_tokens: Mapping[str, str] | None = None):
        self._tokens = dict(_DEFAULT_TOKENS)
        if extra_tokens:
            for token, kind in extra_tokens.items():
                if kind not in MISSING_KINDS:
                    raise ValueError(f"unknown missing kind {kind!r} for token {token!r}")
                self._tokens[token.strip()] = kind
        # first characters that could start a missing value; anything else
        # is present without further inspection
        suspects = set(_WHITESPACE)
        for token in self._tokens:
            if token:
                suspects.add(token[0])
        suspects.update("nN")  # null literal, any case
        self.suspect_first = frozenset(suspects)

    def kind_of(self, raw: str) -> str | None:
        if not raw:
            return "empty"
        if raw[0] not in self.suspect_first:
            return None
        token = raw.strip()
        if not token:
            return "whitespace"
        kind = self._tokens.get(token)
        if kind is not None:
            return kind
        if token.lower() == "null":
            return "null_literal"
        return None

    def is_present(self, raw: str) -> bool:
        return self.kind_of(raw) is None


DEFAULT_CLASSIFIER = MissingClassifier()


@dataclass(frozen=True, slots=True)
class CellValue:
    """A cell with its classification; materialized only on demand."""

    raw: str
    missing_kind: str | None

    @property
    def is_present(self) -> bool:
        return self.missing_kind is None


def classify_missing(raw: str, classifier: MissingClassifier = DEFAULT_CLASSIFIER) -> CellValue:
    return CellValue(raw, classifier.kind_of(raw))


_ALLOWED = frozenset("abcdefghijklmnopqrstuvwxyz0123456789_")


def normalize_header(raw: str) -> str:
    """Normalize a raw header to a lowercase identifier.

    Lowercases, collapses whitespace runs to single underscores, replaces
    any character outside [a-z0-9_] with an underscore, then trims leading
    and trailing underscores from the result.

    Raises ValueError if nothing survives normalization.
    """
    s = "_".join(raw.lower().split())
    s = "".join(ch if ch in _ALLOWED else "_" for ch in s)
    s = s.strip("_")
    if not s:
        raise ValueError(f"header {raw!r} is empty after normalization")
    return s


@dataclass
class RawTable:
    """A CSV file plus its normalized header row.

    row_count is None until a full pass has run; byte_size comes from the
    filesystem at open time.
    """

    path: Path
    raw_headers: list[str]
    headers: list[str]
    byte_size: int
    has_bom: bool
    header_findings: list[Finding] = dc_field(default_factory=list)
    row_count: int | None = None

    @property
    def width(self) -> int:
        return len(self.headers)

    def column_index(self, name: str) -> int | None:
        try:
            return self.headers.index(name)
        except ValueError:
            return None


class RowConsumer:
    """Base class for streaming row consumers.

    start() runs once before the first row, consume() once per delivered
    row with the 1-based data row ordinal, finish() once after the last.
    """

    def start(self, table: RawTable) -> None:  # noqa: B027 - optional hook
        pass

    def consume(self, ordinal: int, row: list[str]) -> None:
        raise NotImplementedError

    def finish(self):  # noqa: B027 - optional hook
        return None


class _LineFeed:
    """Yields decoded lines (terminators kept) while tracking byte offsets.

    Splits strictly on LF so that CR characters and quoted embedded
    newlines survive for the csv module to interpret. next_offset is the
    file offset of the line the next __next__ call will return, which for
    csv parsing is the offset of the upcoming record.
    """

    def __init__(self, fh):
        self._fh = fh
        self._lines: list[bytes] = []
        self._idx = 0
        self._tail = b""
        self._eof = False
        self.next_offset = 0
        self._first = True

    def __iter__(self):
        return self

    def _fill(self) -> bool:
        while True:
            chunk = self._fh.read(_CHUNK)
            if not chunk:
                self._eof = True
                if self._tail:
                    self._lines = [self._tail]
                    self._tail = b""
                    self._idx = 0
                    return True
                return False
            if self._first:
                self._first = False
                if chunk.startswith(BOM):
                    chunk = chunk[len(BOM):]
                    self.next_offset = len(BOM)
            data = self._tail + chunk
            parts = data.split(b"\n")
            self._tail = parts.pop()
            if parts:
                self._lines = [p + b"\n" for p in parts]
                self._idx = 0
                return True

    def __next__(self) -> str:
        if self._idx >= len(self._lines):
            if self._eof or not self._fill():
                raise StopIteration
        line = self._lines[self._idx]
        self._idx += 1
        self.next_offset += len(line)
        return line.decode("utf-8", errors="replace")


def open_table(path: str | os.PathLike) -> RawTable:
    """Read and normalize the header row; the body is not touched.

    Unnamed columns get a synthesized name and an error Finding; collisions
    after normalization get "_2", "_3" suffixes and a warning Finding.
    Raises OSError if the file cannot be opened and ValueError if it has
    no header row.
    """
    p = Path(path)
    byte_size = p.stat().st_size
    has_bom = _starts_with_bom(p)
    findings: list[Finding] = []
    with open(p, "rb") as fh:
        feed = _LineFeed(fh)
        try:
            reader = csv.reader(feed, strict=True)
            raw_headers = next(reader)
        except StopIteration:
            raise ValueError(f"{p}: no header row") from None

    used: set[str] = set()
    headers: list[str] = []
    for i, raw in enumerate(raw_headers):
        try:
            name = normalize_header(raw)
        except ValueError:
            name = f"column_{i + 1}"
            findings.append(make_finding(
                "unnamed_column",
                f"header cell {i + 1} is empty after normalization; using {name!r}",
                fields=(name,),
            ))
        if name in used:
            base = name
            n = 2
            while f"{base}_{n}" in used:
                n += 1
            name = f"{base}_{n}"
            findings.append(make_finding(
                "header_collision",
                f"header {raw!r} collides with an earlier column after normalization; renamed to {name!r}",
                fields=(base, name),
            ))
        used.add(name)
        headers.append(name)

    return RawTable(
        path=p,
        raw_headers=raw_headers,
        headers=headers,
        byte_size=byte_size,
        has_bom=has_bom,
        header_findings=findings,
    )


def _starts_with_bom(p: Path) -> bool:
    with open(p, "rb") as fh:
        return fh.read(len(BOM)) == BOM


@dataclass
class StreamResult:
    row_count: int        # records parsed, ragged included
    delivered: int        # records handed to consumers
    skipped_malformed: int
    skipped_ragged: int


def stream_rows(
    table: RawTable,
    consumers: Iterable[RowConsumer],
    emit: Callable[[Finding], None] | None = None,
) -> StreamResult:
    """Stream the table body through the consumers in one pass.

    Rows whose cell count differs from the header width produce a ragged
    Finding and are not delivered; rows the csv parser rejects produce a
    quoting Finding carrying the byte offset of the record start. Both are
    recoverable: the stream continues with the next record. Unreadable
    files raise OSError.
    """
    consumers = list(consumers)
    sink = emit if emit is not None else (lambda f: None)
    for c in consumers:
        c.start(table)

    width = table.width
    ordinal = 0
    delivered = 0
    malformed = 0
    ragged = 0

    with open(table.path, "rb") as fh:
        feed = _LineFeed(fh)
        reader = csv.reader(feed, strict=True)
        try:
            next(reader)  # header, already captured by open_table
        except StopIteration:
            table.row_count = 0
            for c in consumers:
                c.finish()
            return StreamResult(0, 0, 0, 0)

        while True:
            record_offset = feed.next_offset
            try:
                row = next(reader)
            except StopIteration:
                break
            except csv.Error as exc:
                malformed += 1
                sink(make_finding(
                    "malformed_quoting",
                    f"unparseable record near byte {record_offset}: {exc}",
                    row_locator=record_offset,
                ))
                continue
            if not row:
                continue        # physically blank line, not a record
            ordinal += 1
            if len(row) != width:
                ragged += 1
                sink(make_finding(
                    "ragged_row",
                    f"row {ordinal} has {len(row)} cells, expected {width}",
                    row_locator=ordinal,
                ))
                continue
            for c in consumers:
                c.consume(ordinal, row)
            delivered += 1

    table.row_count = ordinal
    for c in consumers:
        c.finish()
    if malformed or ragged:
        log.info("stream %s: %d malformed, %d ragged of %d records", table.path, malformed, ragged, ordinal)
    return StreamResult(ordinal, delivered, malformed, ragged)
