"""Marijuana-term surveillance over classified rental-ad corpora."""

from adsurveil.model import (
    AdRecord,
    Category,
    GeoKey,
    RecordValidationError,
    Subcategory,
    TermGroup,
    taxonomy_lookup,
    validate_record,
)

__version__ = "0.1.0"

__all__ = [
    "AdRecord",
    "Category",
    "GeoKey",
    "RecordValidationError",
    "Subcategory",
    "TermGroup",
    "taxonomy_lookup",
    "validate_record",
]
