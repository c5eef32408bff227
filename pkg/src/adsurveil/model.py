"""Core ad types, the housing taxonomy and the U.S. geographic hierarchy."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from datetime import datetime, timezone
from decimal import Decimal, InvalidOperation
from typing import Any, Mapping, Optional

# USPS codes for the 50 states plus DC.
STATES: dict[str, str] = {
    "AL": "Alabama", "AK": "Alaska", "AZ": "Arizona", "AR": "Arkansas",
    "CA": "California", "CO": "Colorado", "CT": "Connecticut", "DE": "Delaware",
    "DC": "District of Columbia", "FL": "Florida", "GA": "Georgia", "HI": "Hawaii",
    "ID": "Idaho", "IL": "Illinois", "IN": "Indiana", "IA": "Iowa",
    "KS": "Kansas", "KY": "Kentucky", "LA": "Louisiana", "ME": "Maine",
    "MD": "Maryland", "MA": "Massachusetts", "MI": "Michigan", "MN": "Minnesota",
    "MS": "Mississippi", "MO": "Missouri", "MT": "Montana", "NE": "Nebraska",
    "NV": "Nevada", "NH": "New Hampshire", "NJ": "New Jersey", "NM": "New Mexico",
    "NY": "New York", "NC": "North Carolina", "ND": "North Dakota", "OH": "Ohio",
    "OK": "Oklahoma", "OR": "Oregon", "PA": "Pennsylvania", "RI": "Rhode Island",
    "SC": "South Carolina", "SD": "South Dakota", "TN": "Tennessee", "TX": "Texas",
    "UT": "Utah", "VT": "Vermont", "VA": "Virginia", "WA": "Washington",
    "WV": "West Virginia", "WI": "Wisconsin", "WY": "Wyoming",
}
STATE_CODES: tuple[str, ...] = tuple(sorted(STATES))


class Category(str, enum.Enum):
    HOUSING = "housing"


class Subcategory(str, enum.Enum):
    ROOMS_SHARES = "rooms_shares"
    ROOM_SHARE_WANTED = "room_share_wanted"
    APTS_HOUSING_FOR_RENT = "apts_housing_for_rent"
    SUBLETS_TEMPORARY = "sublets_temporary"
    OFFICE_COMMERCIAL = "office_commercial"

    @property
    def label(self) -> str:
        """Human-facing label as shown on the listing site."""
        return SUBCATEGORY_LABELS[self]


SUBCATEGORY_LABELS: dict[Subcategory, str] = {
    Subcategory.ROOMS_SHARES: "rooms & shares",
    Subcategory.ROOM_SHARE_WANTED: "room/share wanted",
    Subcategory.APTS_HOUSING_FOR_RENT: "apts/housing for rent",
    Subcategory.SUBLETS_TEMPORARY: "sublets & temporary",
    Subcategory.OFFICE_COMMERCIAL: "office & commercial",
}


class TermGroup(str, enum.Enum):
    T1_420_FRIENDLY = "T1_420_friendly"
    T2_MARIJUANA = "T2_marijuana"
    T3_MMJ = "T3_mmj"
    T4_CANNABIS = "T4_cannabis"
    T5_POT = "T5_pot"

    @property
    def column(self) -> str:
        """Lower-case column name used in delimited outputs."""
        return self.value.lower()


@dataclass(frozen=True)
class GeoKey:
    state: str
    city: Optional[str] = None

    def refines(self, other: GeoKey) -> bool:
        """True if this key lies inside ``other`` (same state, and same city if ``other`` has one)."""
        if self.state != other.state:
            return False
        return other.city is None or self.city == other.city


class UnknownSubcategoryError(ValueError):
    pass


class RecordValidationError(ValueError):
    """Raised by :func:`validate_record`; ``errors`` lists every violated constraint code."""

    def __init__(self, errors: list[str]):
        super().__init__("invalid record: " + ", ".join(errors))
        self.errors = errors


def _taxonomy_key(label: str) -> str:
    words = re.sub(r"[\W_]+", " ", label.casefold()).split()
    return " ".join(w for w in words if w != "and")


_TAXONOMY: dict[str, Subcategory] = {}
for _sub in Subcategory:
    _TAXONOMY[_taxonomy_key(_sub.label)] = _sub
    _TAXONOMY[_taxonomy_key(_sub.value)] = _sub
_TAXONOMY.update({
    "room share": Subcategory.ROOMS_SHARES,
    "rooms shared": Subcategory.ROOMS_SHARES,
    "apartments housing for rent": Subcategory.APTS_HOUSING_FOR_RENT,
    "apts housing": Subcategory.APTS_HOUSING_FOR_RENT,
    "sublets temporary housing": Subcategory.SUBLETS_TEMPORARY,
    "office commercial space": Subcategory.OFFICE_COMMERCIAL,
})


def taxonomy_lookup(label: str) -> Subcategory:
    """Map a free-form subcategory label ("Rooms & Shares", "room/share wanted", ...) to the enum.

    Matching ignores case, punctuation, underscores, extra whitespace and the word "and".
    Raises :class:`UnknownSubcategoryError` for anything outside the five housing labels.
    """
    if isinstance(label, Subcategory):
        return label
    try:
        return _TAXONOMY[_taxonomy_key(label)]
    except KeyError:
        raise UnknownSubcategoryError(f"unknown subcategory: {label!r}") from None


def parse_timestamp(value: Any) -> datetime:
    """Parse an ISO-8601 timestamp; naive values are taken as UTC."""
    if isinstance(value, datetime):
        dt = value
    else:
        text = str(value).strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        dt = datetime.fromisoformat(text)
    if dt.tzinfo is None:
        return dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def format_timestamp(dt: datetime) -> str:
    return dt.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


@dataclass(frozen=True)
class AdRecord:
    id: str
    title: str
    state: str
    city: str
    subcategory: Subcategory
    posted_at: datetime
    body: str = ""
    price: Optional[Decimal] = None
    bedrooms: Optional[int] = None
    url: Optional[str] = None
    category: Category = Category.HOUSING

    @property
    def geo(self) -> GeoKey:
        return GeoKey(self.state, self.city)

    def to_dict(self) -> dict[str, Any]:
        """JSON-ready mapping using the record-file key set."""
        price: Any = None
        if self.price is not None:
            price = int(self.price) if self.price == self.price.to_integral_value() else float(self.price)
        return {
            "id": self.id,
            "url": self.url,
            "title": self.title,
            "body": self.body,
            "price": price,
            "bedrooms": self.bedrooms,
            "category": self.category.value,
            "subcategory": self.subcategory.value,
            "state": self.state,
            "city": self.city,
            "posted_at": format_timestamp(self.posted_at),
        }


def _present(raw: Mapping[str, Any], key: str) -> bool:
    value = raw.get(key)
    return value is not None and not (isinstance(value, str) and not value.strip())


def _to_decimal(value: Any) -> Decimal:
    if isinstance(value, bool):
        raise InvalidOperation
    if isinstance(value, Decimal):
        return value
    if isinstance(value, (int, float)):
        return Decimal(str(value))
    from adsurveil.ingest import parse_price

    parsed = parse_price(str(value))
    if parsed is None:
        raise InvalidOperation
    return parsed


def validate_record(raw: Mapping[str, Any], default_geo: Optional[GeoKey] = None) -> AdRecord:
    """Build an :class:`AdRecord` from loosely typed fields.

    Every violated constraint is collected before raising, so the error lists
    the complete set (``missing_id``, ``unknown_state``, ``negative_price``, ...).
    ``default_geo`` fills a missing state and/or city.
    """
    errors: list[str] = []
    fields = dict(raw)
    if default_geo is not None:
        if not _present(fields, "state"):
            fields["state"] = default_geo.state
        if not _present(fields, "city") and default_geo.city:
            fields["city"] = default_geo.city

    for key in ("id", "title", "state", "city", "subcategory", "posted_at"):
        if not _present(fields, key):
            errors.append(f"missing_{key}")

    state = str(fields.get("state") or "").strip().upper()
    if _present(fields, "state") and state not in STATES:
        errors.append("unknown_state")

    category = Category.HOUSING
    if _present(fields, "category"):
        try:
            category = Category(str(fields["category"]).strip().casefold())
        except ValueError:
            errors.append("unknown_category")

    subcategory = None
    if _present(fields, "subcategory"):
        try:
            subcategory = taxonomy_lookup(str(fields["subcategory"]))
        except UnknownSubcategoryError:
            errors.append("unknown_subcategory")

    posted_at = None
    if _present(fields, "posted_at"):
        try:
            posted_at = parse_timestamp(fields["posted_at"])
        except (TypeError, ValueError):
            errors.append("bad_timestamp")

    price = None
    if _present(fields, "price"):
        try:
            price = _to_decimal(fields["price"])
            if not price.is_finite():
                raise InvalidOperation
        except (InvalidOperation, ValueError):
            errors.append("bad_price")
        else:
            if price < 0:
                errors.append("negative_price")

    bedrooms = None
    if _present(fields, "bedrooms"):
        value = fields["bedrooms"]
        if isinstance(value, bool) or not (isinstance(value, int) or str(value).strip().isdigit()):
            errors.append("bad_bedrooms")
        else:
            bedrooms = int(value)
            if bedrooms < 0:
                errors.append("bad_bedrooms")

    if errors:
        raise RecordValidationError(errors)
    body = fields.get("body")
    url = fields.get("url")
    return AdRecord(
        id=str(fields["id"]).strip(),
        title=str(fields["title"]),
        state=state,
        city=str(fields["city"]).strip(),
        subcategory=subcategory,
        posted_at=posted_at,
        body="" if body is None else str(body),
        price=price,
        bedrooms=bedrooms,
        url=None if url is None else str(url),
        category=category,
    )
