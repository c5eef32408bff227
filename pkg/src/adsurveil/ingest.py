"""Read ad corpora from JSONL record files and captured listing pages."""

from __future__ import annotations

import enum
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal
from html.parser import HTMLParser
from pathlib import Path
from typing import Iterator, Optional

from adsurveil.model import AdRecord, GeoKey, RecordValidationError, validate_record

log = logging.getLogger(__name__)

_PRICE_RE = re.compile(r"\$?\s*(\d{1,3}(?:,\d{3})+|\d+)(?:\.(\d+))?")


def parse_price(text: str) -> Optional[Decimal]:
    """First monetary amount in ``text`` ("$650", "650", "$1,200.50"), or None."""
    if not text:
        return None
    m = _PRICE_RE.search(text)
    if m is None:
        return None
    amount = m.group(1).replace(",", "")
    if m.group(2):
        amount += "." + m.group(2)
    return Decimal(amount)


class SourceKind(str, enum.Enum):
    RECORD_FILE = "record_file"
    HTML_CAPTURE = "html_capture"


@dataclass(frozen=True)
class CorpusSource:
    kind: SourceKind
    path: Path
    default_geo: Optional[GeoKey] = None
    # Capture pages rarely carry their subcategory in every row.
    default_subcategory: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SourceKind(self.kind))
        object.__setattr__(self, "path", Path(self.path))


@dataclass
class IngestStats:
    records_read: int = 0
    records_valid: int = 0
    records_skipped: int = 0
    skip_reasons: Counter = field(default_factory=Counter)

    def skip(self, reason: str) -> None:
        self.records_skipped += 1
        self.skip_reasons[reason] += 1

    def merge(self, other: IngestStats) -> None:
        self.records_read += other.records_read
        self.records_valid += other.records_valid
        self.records_skipped += other.records_skipped
        self.skip_reasons.update(other.skip_reasons)

    def to_dict(self) -> dict:
        return {
            "records_read": self.records_read,
            "records_valid": self.records_valid,
            "records_skipped": self.records_skipped,
            "skip_reasons": dict(sorted(self.skip_reasons.items())),
        }


class SourceError(OSError):
    pass


def _open_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise SourceError(f"cannot read corpus {path}: {exc}") from exc


def read_record_file(source: CorpusSource, stats: Optional[IngestStats] = None) -> Iterator[AdRecord]:
    """Yield validated records from a one-object-per-line file, in file order.

    Blank lines are ignored. Malformed or invalid lines are tallied in ``stats``
    under their first error code and skipped. An unreadable file raises
    :class:`SourceError` before anything is yielded.
    """
    stats = stats if stats is not None else IngestStats()
    text = _open_text(source.path)
    for line in text.splitlines():
        if not line.strip():
            continue
        stats.records_read += 1
        try:
            raw = json.loads(line, parse_float=Decimal)
        except json.JSONDecodeError:
            stats.skip("parse_error")
            continue
        if not isinstance(raw, dict):
            stats.skip("parse_error")
            continue
        try:
            record = validate_record(raw, source.default_geo)
        except RecordValidationError as exc:
            stats.skip(exc.errors[0])
            continue
        stats.records_valid += 1
        yield record


class _CaptureParser(HTMLParser):
    """Collects ``result-row`` listing elements and their designated child fields."""

    _FIELDS = ("result-title", "result-price", "result-hood", "result-body")

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.rows: list[dict] = []
        self._stack: list[tuple[str, dict]] = []  # (tag, context attrs inherited)
        self._row: Optional[dict] = None
        self._row_depth = 0
        self._capture: list[tuple[str, int]] = []  # (field, depth)

    @staticmethod
    def _classes(attrs: dict) -> set[str]:
        return set((attrs.get("class") or "").split())

    def handle_starttag(self, tag, attrs):
        attrs = dict(attrs)
        inherited = dict(self._stack[-1][1]) if self._stack else {}
        for key in ("data-state", "data-city", "data-subcategory"):
            if attrs.get(key):
                inherited[key] = attrs[key]
        if tag in self._VOID:
            self._open(tag, attrs, inherited)
            self._close_at(len(self._stack) + 1)
            return
        self._stack.append((tag, inherited))
        self._open(tag, attrs, inherited)

    _VOID = {"br", "img", "hr", "meta", "link", "input", "wbr"}

    def _open(self, tag, attrs, inherited):
        depth = len(self._stack)
        classes = self._classes(attrs)
        if self._row is None and "result-row" in classes:
            self._row = {"attrs": attrs, "context": inherited, "text": {}}
            self._row_depth = depth
            self.rows.append(self._row)
            return
        if self._row is None:
            return
        for name in self._FIELDS:
            if name in classes:
                self._row["text"].setdefault(name, "")
                self._capture.append((name, depth))
                if name == "result-title" and attrs.get("href"):
                    self._row.setdefault("href", attrs["href"])
        if tag == "time" and attrs.get("datetime"):
            self._row.setdefault("datetime", attrs["datetime"])

    def handle_endtag(self, tag):
        if tag in self._VOID:
            return
        for i in range(len(self._stack) - 1, -1, -1):
            if self._stack[i][0] == tag:
                self._close_at(i + 1)
                del self._stack[i:]
                return

    def _close_at(self, depth):
        self._capture = [(f, d) for f, d in self._capture if d < depth]
        if self._row is not None and self._row_depth >= depth:
            self._row = None

    def handle_data(self, data):
        if self._row is None:
            return
        for name, _ in self._capture:
            self._row["text"][name] += data


def _clean(text: Optional[str]) -> str:
    return " ".join((text or "").split())


def parse_html_capture(source: CorpusSource, stats: Optional[IngestStats] = None) -> Iterator[AdRecord]:
    """Yield one record per ``result-row`` element of a saved listing page.

    Geography comes from ``data-state``/``data-city`` attributes on the row or
    an ancestor, then the neighborhood text for the city, then ``default_geo``.
    The record id is the row's ``data-pid``, falling back to ``<file stem>-<index>``.
    """
    stats = stats if stats is not None else IngestStats()
    parser = _CaptureParser()
    parser.feed(_open_text(source.path))
    parser.close()
    for index, row in enumerate(parser.rows):
        stats.records_read += 1
        texts = row["text"]
        title = _clean(texts.get("result-title"))
        if not title:
            stats.skip("missing_title")
            continue
        attrs, context = row["attrs"], row["context"]
        hood = _clean(texts.get("result-hood")).strip("()").strip()
        raw = {
            "id": attrs.get("data-pid") or f"{source.path.stem}-{index}",
            "url": row.get("href"),
            "title": title,
            "body": _clean(texts.get("result-body")),
            "price": parse_price(_clean(texts.get("result-price"))),
            "subcategory": attrs.get("data-subcategory") or context.get("data-subcategory")
            or source.default_subcategory,
            "state": attrs.get("data-state") or context.get("data-state"),
            "city": attrs.get("data-city") or context.get("data-city") or hood or None,
            "posted_at": row.get("datetime"),
            "bedrooms": attrs.get("data-bedrooms"),
        }
        try:
            record = validate_record(raw, source.default_geo)
        except RecordValidationError as exc:
            stats.skip(exc.errors[0])
            continue
        stats.records_valid += 1
        yield record


def iter_source(source: CorpusSource, stats: Optional[IngestStats] = None) -> Iterator[AdRecord]:
    if source.kind is SourceKind.RECORD_FILE:
        return read_record_file(source, stats)
    return parse_html_capture(source, stats)


def ingest(sources: list[CorpusSource]) -> tuple[list[AdRecord], IngestStats]:
    """Read every source in order; records repeating an earlier id are skipped as ``duplicate_id``."""
    stats = IngestStats()
    records: list[AdRecord] = []
    seen: set[str] = set()
    for source in sources:
        part = IngestStats()
        for record in iter_source(source, part):
            if record.id in seen:
                part.records_valid -= 1
                part.skip("duplicate_id")
                continue
            seen.add(record.id)
            records.append(record)
        log.info("ingested %s: %d valid, %d skipped", source.path, part.records_valid, part.records_skipped)
        stats.merge(part)
    return records, stats


def write_records(records, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for record in records:
            fh.write(json.dumps(record.to_dict(), ensure_ascii=False, sort_keys=False))
            fh.write("\n")
