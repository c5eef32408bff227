import json
import re
from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

from adsurveil.ingest import (
    CorpusSource,
    IngestStats,
    SourceError,
    ingest,
    parse_html_capture,
    parse_price,
    read_record_file,
)
from adsurveil.model import GeoKey, Subcategory

from conftest import DATA


def _line(i, **kw):
    rec = {"id": f"r{i}", "url": None, "title": f"Room {i}", "body": "", "price": 650, "bedrooms": 1,
           "category": "housing", "subcategory": "rooms & shares", "state": "CO", "city": "Denver",
           "posted_at": "2016-05-01T00:00:00Z"}
    rec.update(kw)
    return json.dumps(rec)


def _read(path, **kw):
    stats = IngestStats()
    return list(read_record_file(CorpusSource("record_file", path, **kw), stats)), stats


def test_three_valid_lines(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text("\n".join(_line(i) for i in range(3)) + "\n")
    recs, stats = _read(p)
    assert [r.id for r in recs] == ["r0", "r1", "r2"]
    assert (stats.records_read, stats.records_valid, stats.records_skipped) == (3, 3, 0)


def test_malformed_line_skipped(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text(_line(0) + "\n{not json\n" + _line(1) + "\n")
    recs, stats = _read(p)
    assert len(recs) == 2
    assert stats.records_skipped == 1 and stats.skip_reasons == {"parse_error": 1}


def test_empty_file(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text("")
    recs, stats = _read(p)
    assert recs == [] and stats.to_dict() == IngestStats().to_dict()


def test_invalid_records_counted_by_reason(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text("\n".join([_line(0, subcategory="boats"), _line(1, state="XX"), _line(2), "[1, 2]"]))
    recs, stats = _read(p)
    assert len(recs) == 1
    assert stats.skip_reasons == {"unknown_subcategory": 1, "unknown_state": 1, "parse_error": 1}


def test_unreadable_file_is_fatal(tmp_path):
    with pytest.raises(SourceError):
        _read(tmp_path / "missing.jsonl")


def test_default_geo(tmp_path):
    p = tmp_path / "c.jsonl"
    p.write_text(_line(0, state=None, city=None))
    recs, _ = _read(p, default_geo=GeoKey("OR", "Portland"))
    assert recs[0].geo == GeoKey("OR", "Portland")


def test_duplicate_ids_across_sources(tmp_path):
    a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
    a.write_text(_line(0) + "\n" + _line(1))
    b.write_text(_line(1) + "\n" + _line(2))
    recs, stats = ingest([CorpusSource("record_file", a), CorpusSource("record_file", b)])
    assert [r.id for r in recs] == ["r0", "r1", "r2"]
    assert stats.records_read == 4 and stats.skip_reasons == {"duplicate_id": 1}
    assert stats.records_read == stats.records_valid + stats.records_skipped


@st.composite
def corpus_lines(draw):
    kinds = draw(st.lists(st.sampled_from(["ok", "bad_json", "bad_state", "blank"]), max_size=30))
    lines = []
    for i, k in enumerate(kinds):
        lines.append({"ok": _line(i), "bad_json": "{oops", "bad_state": _line(i, state="ZZ"), "blank": "  "}[k])
    return "\n".join(lines)


@given(corpus_lines())
def test_read_count_matches_independent_line_count(tmp_path_factory, text):
    p = tmp_path_factory.mktemp("c") / "c.jsonl"
    p.write_text(text)
    recs, stats = _read(p)
    assert stats.records_read == sum(1 for line in text.split("\n") if line.strip())
    assert stats.records_read == stats.records_valid + stats.records_skipped
    assert len(recs) == stats.records_valid
    again, stats2 = _read(p)
    assert again == recs and stats2.to_dict() == stats.to_dict()


# ---------------------------------------------------------------- prices

def test_parse_price_examples():
    assert parse_price("$650") == Decimal(650)
    assert parse_price("$1,200") == Decimal(1200)
    assert parse_price("650") == Decimal(650)
    assert parse_price("call me") is None
    assert parse_price("") is None
    assert parse_price("$1,450.50 / month") == Decimal("1450.50")


@given(st.integers(0, 10**7))
def test_parse_price_comma_formats(n):
    # oracle: the formatted sample with commas stripped
    for text in (f"${n:,}", f"{n:,}", f"$ {n}"):
        assert parse_price(text) == Decimal(text.replace("$", "").replace(",", "").strip())


# ---------------------------------------------------------------- html capture

CAPTURE = """<html><body><ul class="rows" data-state="CO" data-subcategory="rooms &amp; shares">
<li class="result-row" data-pid="p1">
  <a href="/den/1.html" class="result-title hdrlnk">Sunny room, 420 friendly</a>
  <time class="result-date" datetime="2016-05-02 10:15">May 2</time>
  <span class="result-price">$650</span>
  <span class="result-hood"> (Denver) </span>
  <span class="unknown">noise<br></span>
</li>
<li class="result-row" data-pid="p2">
  <span class="result-meta"><span class="result-price">$1,200</span></span>
  <time datetime="2016-05-03T08:00:00Z">May 3</time>
  <a class="result-title">Big &amp; bright apt</a>
</li>
<li class="result-row" data-pid="p3"><time datetime="2016-05-03 09:00"></time>
  <span class="result-price">$300</span></li>
</ul></body></html>"""


def _capture(tmp_path, text, **kw):
    p = tmp_path / "page.html"
    p.write_text(text)
    stats = IngestStats()
    return list(parse_html_capture(CorpusSource("html_capture", p, **kw), stats)), stats, p


def test_html_capture_fields(tmp_path):
    recs, stats, _ = _capture(tmp_path, CAPTURE, default_geo=GeoKey("CO", "Aurora"))
    assert [r.id for r in recs] == ["p1", "p2"]
    a, b = recs
    assert a.title == "Sunny room, 420 friendly"
    assert a.price == Decimal(650) and a.city == "Denver" and a.state == "CO"
    assert a.url == "/den/1.html"
    assert a.subcategory is Subcategory.ROOMS_SHARES
    assert a.posted_at.isoformat() == "2016-05-02T10:15:00+00:00"
    assert b.title == "Big & bright apt" and b.price == Decimal(1200) and b.city == "Aurora"
    assert stats.skip_reasons == {"missing_title": 1}
    assert stats.records_read == 3


def test_html_two_titled_rows(tmp_path):
    two = CAPTURE.split('<li class="result-row" data-pid="p3">')[0] + "</ul></body></html>"
    recs, stats, _ = _capture(tmp_path, two, default_geo=GeoKey("CO", "Aurora"))
    assert len(recs) == 2 and stats.records_skipped == 0


def test_html_without_rows(tmp_path):
    recs, stats, _ = _capture(tmp_path, "<html><body><p>nothing here</p></body></html>")
    assert recs == [] and stats.records_read == 0


def test_html_golden_capture_counts_match_independent_counter():
    path = DATA / "golden" / "capture.html"
    text = path.read_text()
    expected = len(re.findall(r'class="[^"]*\bresult-row\b', text))
    stats = IngestStats()
    recs = list(parse_html_capture(CorpusSource("html_capture", path), stats))
    assert stats.records_read == expected == 20
    assert len(recs) == 20
    again = list(parse_html_capture(CorpusSource("html_capture", path)))
    assert again == recs
