import json
from datetime import datetime, timezone
from decimal import Decimal

import pytest
from hypothesis import given, strategies as st

from adsurveil.model import (
    STATES,
    AdRecord,
    GeoKey,
    RecordValidationError,
    Subcategory,
    TermGroup,
    UnknownSubcategoryError,
    taxonomy_lookup,
    validate_record,
)

MINIMAL = {"id": "a1", "title": "Room", "state": "CO", "city": "Denver",
           "subcategory": "rooms_shares", "posted_at": "2016-05-01T00:00:00Z"}


def test_minimal_record_is_valid():
    ad = validate_record(MINIMAL)
    assert ad.id == "a1"
    assert ad.subcategory is Subcategory.ROOMS_SHARES
    assert ad.posted_at == datetime(2016, 5, 1, tzinfo=timezone.utc)
    assert ad.price is None and ad.bedrooms is None and ad.body == ""


def test_unknown_state():
    with pytest.raises(RecordValidationError) as exc:
        validate_record({**MINIMAL, "id": "a2", "state": "XX"})
    assert exc.value.errors == ["unknown_state"]


def test_negative_price():
    with pytest.raises(RecordValidationError) as exc:
        validate_record({**MINIMAL, "id": "a3", "price": -5})
    assert "negative_price" in exc.value.errors


def test_all_errors_reported_together():
    with pytest.raises(RecordValidationError) as exc:
        validate_record({"state": "XX", "price": -1, "subcategory": "boats"})
    assert set(exc.value.errors) >= {
        "missing_id", "missing_title", "missing_city", "missing_posted_at",
        "unknown_state", "negative_price", "unknown_subcategory",
    }


def test_dc_is_a_state():
    assert validate_record({**MINIMAL, "state": "dc"}).state == "DC"
    assert len(STATES) == 51


def test_default_geo_fills_missing_location():
    raw = {k: v for k, v in MINIMAL.items() if k not in ("state", "city")}
    ad = validate_record(raw, GeoKey("WA", "Seattle"))
    assert (ad.state, ad.city) == ("WA", "Seattle")


def test_price_strings_and_bedrooms():
    ad = validate_record({**MINIMAL, "price": "$1,200", "bedrooms": "2"})
    assert ad.price == Decimal(1200) and ad.bedrooms == 2
    with pytest.raises(RecordValidationError):
        validate_record({**MINIMAL, "bedrooms": -1})


def test_non_housing_category_rejected():
    with pytest.raises(RecordValidationError) as exc:
        validate_record({**MINIMAL, "category": "jobs"})
    assert exc.value.errors == ["unknown_category"]


@pytest.mark.parametrize("label,expected", [
    ("rooms & shares", Subcategory.ROOMS_SHARES),
    ("Office & Commercial", Subcategory.OFFICE_COMMERCIAL),
    ("room/share wanted", Subcategory.ROOM_SHARE_WANTED),
    ("apts/housing for rent", Subcategory.APTS_HOUSING_FOR_RENT),
    ("sublets & temporary", Subcategory.SUBLETS_TEMPORARY),
    ("rooms and shares", Subcategory.ROOMS_SHARES),
    ("sublets_temporary", Subcategory.SUBLETS_TEMPORARY),
])
def test_taxonomy_lookup(label, expected):
    assert taxonomy_lookup(label) is expected


def test_taxonomy_unknown():
    with pytest.raises(UnknownSubcategoryError):
        taxonomy_lookup("boats for sale")


def test_taxonomy_total_over_case_and_whitespace():
    # brute force: 5 labels x 3 casings x 2 spacings
    for sub in Subcategory:
        for case in (str.lower, str.upper, str.title):
            for spacing in (lambda s: s, lambda s: "  " + s.replace(" ", "  ") + "  "):
                assert taxonomy_lookup(spacing(case(sub.label))) is sub


def test_geokey_refines():
    assert GeoKey("CO", "Denver").refines(GeoKey("CO"))
    assert not GeoKey("CO").refines(GeoKey("CO", "Denver"))
    assert not GeoKey("CO", "Denver").refines(GeoKey("WA"))


def test_term_groups():
    assert [g.column for g in TermGroup] == ["t1_420_friendly", "t2_marijuana", "t3_mmj", "t4_cannabis", "t5_pot"]


records = st.builds(
    AdRecord,
    id=st.text(st.characters(categories=("L", "N")), min_size=1, max_size=8),
    title=st.text(min_size=1, max_size=30).filter(lambda s: s.strip()),
    state=st.sampled_from(sorted(STATES)),
    city=st.text(st.characters(categories=("L",)), min_size=1, max_size=12),
    subcategory=st.sampled_from(list(Subcategory)),
    posted_at=st.datetimes(min_value=datetime(2000, 1, 1), max_value=datetime(2030, 1, 1),
                           timezones=st.just(timezone.utc)).map(lambda d: d.replace(microsecond=0)),
    body=st.text(max_size=60),
    price=st.none() | st.decimals(min_value=0, max_value=10**6, places=2),
    bedrooms=st.none() | st.integers(0, 9),
    url=st.none() | st.just("https://example.org/x"),
)


@given(records)
def test_round_trip_through_json(ad):
    line = json.dumps(ad.to_dict())
    back = validate_record(json.loads(line, parse_float=Decimal))
    assert back == ad
