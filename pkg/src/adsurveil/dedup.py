"""Duplicate-ad removal and price-outlier filtering."""

from __future__ import annotations

import hashlib
import re
import unicodedata
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Optional

from adsurveil.model import AdRecord

_PUNCT_RE = re.compile(r"[^\w\s]+|_+")


def normalize_text(s: str) -> str:
    """NFKC + casefold, punctuation runs to a space, whitespace collapsed and stripped."""
    s = unicodedata.normalize("NFKC", s).casefold()
    return " ".join(_PUNCT_RE.sub(" ", s).split())


@dataclass(frozen=True)
class DedupKeyPair:
    title_key: tuple
    content_key: Optional[str]  # None for empty bodies, which never content-match


def dedup_keys(ad: AdRecord) -> DedupKeyPair:
    price = None if ad.price is None else format(ad.price.normalize(), "f")
    title_key = (normalize_text(ad.title), price, ad.state, normalize_text(ad.city), ad.bedrooms)
    body = normalize_text(ad.body)
    content_key = hashlib.sha256(body.encode("utf-8")).hexdigest() if body else None
    return DedupKeyPair(title_key, content_key)


def is_duplicate(a: AdRecord, b: AdRecord) -> bool:
    ka, kb = dedup_keys(a), dedup_keys(b)
    if ka.title_key == kb.title_key:
        return True
    return ka.content_key is not None and ka.content_key == kb.content_key


@dataclass
class FilterReport:
    input_count: int = 0
    kept_count: int = 0
    duplicates_removed: int = 0
    outliers_removed: int = 0
    duplicate_clusters: list[tuple[str, list[str]]] = field(default_factory=list)
    scope: str = "global"

    def check(self) -> None:
        if self.input_count != self.kept_count + self.duplicates_removed + self.outliers_removed:
            raise AssertionError(f"filter conservation violated: {self}")

    def then(self, later: FilterReport) -> FilterReport:
        """Chain this report with one for a stage applied to this stage's output."""
        if later.input_count != self.kept_count:
            raise ValueError("reports do not chain")
        return FilterReport(
            input_count=self.input_count,
            kept_count=later.kept_count,
            duplicates_removed=self.duplicates_removed + later.duplicates_removed,
            outliers_removed=self.outliers_removed + later.outliers_removed,
            duplicate_clusters=self.duplicate_clusters + later.duplicate_clusters,
            scope=self.scope,
        )

    def to_dict(self, clusters: bool = True) -> dict:
        out = {
            "input_count": self.input_count,
            "kept_count": self.kept_count,
            "duplicates_removed": self.duplicates_removed,
            "outliers_removed": self.outliers_removed,
            "scope": self.scope,
        }
        if clusters:
            out["duplicate_clusters"] = [{"kept": k, "removed": r} for k, r in self.duplicate_clusters]
        else:
            out["duplicate_cluster_count"] = len(self.duplicate_clusters)
        return out


def _keep_order(ad: AdRecord):
    return (ad.posted_at, ad.id)


def dedup(corpus: Iterable[AdRecord]) -> tuple[list[AdRecord], FilterReport]:
    """Collapse duplicate clusters to their earliest member by (posted_at, id).

    Clusters are the connected components of :func:`is_duplicate`, found with a
    union-find over the two key kinds. Kept records stay in input order.
    """
    ads = list(corpus)
    parent = list(range(len(ads)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)

    first_by_key: dict = {}
    for i, ad in enumerate(ads):
        keys = dedup_keys(ad)
        for key in (("t", keys.title_key), ("c", keys.content_key)):
            if key[1] is None:
                continue
            j = first_by_key.setdefault(key, i)
            if j != i:
                union(i, j)

    members: dict[int, list[int]] = {}
    for i in range(len(ads)):
        members.setdefault(find(i), []).append(i)

    keep = [False] * len(ads)
    clusters = []
    for group in members.values():
        winner = min(group, key=lambda i: _keep_order(ads[i]))
        keep[winner] = True
        if len(group) > 1:
            removed = sorted((ads[i] for i in group if i != winner), key=_keep_order)
            clusters.append((winner, [r.id for r in removed]))
    clusters.sort()

    kept = [ad for ad, k in zip(ads, keep) if k]
    report = FilterReport(
        input_count=len(ads),
        kept_count=len(kept),
        duplicates_removed=len(ads) - len(kept),
        duplicate_clusters=[(ads[w].id, removed) for w, removed in clusters],
    )
    report.check()
    return kept, report


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PriceBounds:
    min: Decimal = Decimal(10)
    max: Decimal = Decimal(100_000)

    def __post_init__(self):
        object.__setattr__(self, "min", Decimal(str(self.min)))
        object.__setattr__(self, "max", Decimal(str(self.max)))
        if not self.min < self.max:
            raise ConfigError(f"price bounds need min < max, got [{self.min}, {self.max}]")


def filter_outliers(corpus: Iterable[AdRecord], bounds: PriceBounds = PriceBounds()) -> tuple[list[AdRecord], FilterReport]:
    """Drop ads whose price lies outside ``[bounds.min, bounds.max]``; priceless ads always pass."""
    ads = list(corpus)
    kept = [ad for ad in ads if ad.price is None or bounds.min <= ad.price <= bounds.max]
    report = FilterReport(input_count=len(ads), kept_count=len(kept), outliers_removed=len(ads) - len(kept))
    report.check()
    return kept, report
