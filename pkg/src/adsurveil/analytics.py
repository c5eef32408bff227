"""Dataset rows, count tables, per-capita state rates, rankings and correlations."""

from __future__ import annotations

import csv
import enum
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime
from decimal import Decimal
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

from adsurveil.extract import Polarity, TermHit, count_by_group
from adsurveil.model import STATES, AdRecord, Subcategory, TermGroup, format_timestamp

ROWS_SCHEMA = "adsurveil.rows/1"
NA = "NA"


@dataclass(frozen=True)
class ExtractionRow:
    id: str
    title: str
    posted_at: datetime
    state: str
    city: str
    price: Optional[Decimal]
    subcategory: Subcategory
    counts: tuple[int, ...]  # one per TermGroup, in enum order

    def count(self, group: TermGroup) -> int:
        return self.counts[_GROUP_INDEX[group]]

    @property
    def has_hit(self) -> bool:
        return any(self.counts)

    def as_csv(self) -> list[str]:
        price = NA if self.price is None else format(self.price.normalize(), "f")
        return [self.id, self.title or NA, format_timestamp(self.posted_at), self.state, self.city or NA,
                price, self.subcategory.value, *map(str, self.counts)]


_GROUP_INDEX = {g: i for i, g in enumerate(TermGroup)}
ROW_COLUMNS = ["id", "title", "posted_at", "state", "city", "price", "subcategory"] + [g.column for g in TermGroup]


def build_rows(ads: Iterable[AdRecord], hits_by_ad: Mapping[str, list[TermHit]]) -> list[ExtractionRow]:
    """One row per ad (zero-hit ads included), ordered by (state, city, posted_at, id)."""
    rows = []
    for ad in ads:
        counts = count_by_group(hits_by_ad.get(ad.id, ()))
        rows.append(ExtractionRow(ad.id, ad.title, ad.posted_at, ad.state, ad.city, ad.price,
                                  ad.subcategory, tuple(counts[g] for g in TermGroup)))
    rows.sort(key=lambda r: (r.state, r.city, r.posted_at, r.id))
    return rows


# ---------------------------------------------------------------- count tables

@dataclass
class CountTable:
    """Row label -> group -> count, with per-group column totals."""

    rows: dict[str, dict[TermGroup, int]]
    row_label: str = "subcategory"
    totals: dict[TermGroup, int] = field(default=None)

    def __post_init__(self):
        computed = {g: sum(r[g] for r in self.rows.values()) for g in TermGroup}
        if self.totals is None:
            self.totals = computed
        elif self.totals != computed:
            raise ValueError("totals do not equal column sums")


def _partial_counts(args) -> dict:
    rows, key_attr, allowed, per_ad = args
    acc: dict = {}
    for r in rows:
        if r.subcategory not in allowed:
            continue
        key = getattr(r, key_attr)
        cur = acc.get(key)
        if cur is None:
            cur = acc[key] = [0] * len(TermGroup)
        for i, c in enumerate(r.counts):
            cur[i] += (1 if c else 0) if per_ad else c
    return acc


def _merge(parts: Iterable[dict]) -> dict:
    out: dict = {}
    for part in parts:
        for key, vec in part.items():
            cur = out.setdefault(key, [0] * len(TermGroup))
            for i, v in enumerate(vec):
                cur[i] += v
    return out


def _aggregate(rows, key_attr, allowed, per_ad, workers, chunk_size=20_000) -> dict:
    rows = list(rows)
    chunks = [(rows[i:i + chunk_size], key_attr, allowed, per_ad) for i in range(0, len(rows), chunk_size)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return _merge(pool.map(_partial_counts, chunks))
    return _merge(map(_partial_counts, chunks))


def count_table(rows: Iterable[ExtractionRow], subcategories: Iterable[Subcategory] = tuple(Subcategory),
                per_ad: bool = False, workers: int = 1) -> CountTable:
    """Occurrence counts per subcategory and group over ``subcategories``.

    Every requested subcategory appears, zero-filled. ``per_ad=True`` counts
    ads with at least one hit in the group instead of occurrences.
    """
    allowed = [s for s in Subcategory if s in set(subcategories)]
    acc = _aggregate(rows, "subcategory", frozenset(allowed), per_ad, workers)
    table = {}
    for sub in allowed:
        vec = acc.get(sub, [0] * len(TermGroup))
        table[sub.value] = dict(zip(TermGroup, vec))
    return CountTable(table)


def count_table_by_state(rows: Iterable[ExtractionRow], subcategories: Iterable[Subcategory],
                         states: Optional[Sequence[str]] = None, per_ad: bool = False,
                         workers: int = 1) -> CountTable:
    """Per-state counts restricted to ``subcategories`` (the office & commercial table)."""
    acc = _aggregate(rows, "state", frozenset(subcategories), per_ad, workers)
    keys = sorted(acc) if states is None else list(states)
    return CountTable({s: dict(zip(TermGroup, acc.get(s, [0] * len(TermGroup)))) for s in keys}, row_label="state")


def polarity_table(hits: Iterable[TermHit]) -> dict[TermGroup, dict[Polarity, int]]:
    counts = Counter((h.group, h.polarity) for h in hits)
    return {g: {p: counts.get((g, p), 0) for p in Polarity} for g in TermGroup}


# ---------------------------------------------------------------- rates

class MissingPopulationError(KeyError):
    def __init__(self, state: str):
        super().__init__(state)
        self.state = state

    def __str__(self):
        return f"no population entry for state {self.state}"


class NormalizeBy(str, enum.Enum):
    POPULATION = "population"
    LISTINGS = "listings"


@dataclass(frozen=True)
class StateRate:
    state: str
    ad_count: int
    population: int  # the denominator: residents, or total listings when normalizing by listings
    rate: float      # ad_count per 100,000 of the denominator


PER = 100_000


def load_population(path: Path) -> dict[str, int]:
    """Read a ``state,population`` file; a header row is optional."""
    out = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.reader(fh):
            if not row or not row[0].strip() or row[0].strip().lower() == "state":
                continue
            state, pop = row[0].strip().upper(), int(row[1])
            if state not in STATES:
                raise ValueError(f"{path}: unknown state code {state!r}")
            if pop <= 0:
                raise ValueError(f"{path}: population for {state} must be positive")
            out[state] = pop
    return out


def state_rates(rows: Iterable[ExtractionRow], population: Mapping[str, int],
                normalize_by: NormalizeBy = NormalizeBy.POPULATION) -> list[StateRate]:
    """Hit-ad counts per state (ads with any hit) scaled per 100,000 residents or listings."""
    normalize_by = NormalizeBy(normalize_by)
    hit_ads: Counter = Counter()
    listings: Counter = Counter()
    for r in rows:
        listings[r.state] += 1
        if r.has_hit:
            hit_ads[r.state] += 1
    out = []
    for state in sorted(listings):
        if normalize_by is NormalizeBy.POPULATION:
            if state not in population:
                raise MissingPopulationError(state)
            denom = population[state]
        else:
            denom = listings[state]
        out.append(StateRate(state, hit_ads[state], denom, hit_ads[state] * PER / denom))
    return out


def top_n(rates: Iterable[StateRate], n: int, by: str = "rate") -> list[StateRate]:
    """Descending by ``rate`` or ``ad_count``; ties go to the lower state code."""
    if n < 1:
        raise ValueError("n must be >= 1")
    if by not in ("rate", "ad_count"):
        raise ValueError(f"unknown ranking metric {by!r}")
    return sorted(rates, key=lambda r: (-getattr(r, by), r.state))[:n]


# ---------------------------------------------------------------- correlation

class UndefinedCorrelation(ValueError):
    pass


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation via centred sums; clamps rounding to [-1, 1]."""
    n = len(x)
    if n != len(y):
        raise UndefinedCorrelation(f"length mismatch: {n} vs {len(y)}")
    if n < 2:
        raise UndefinedCorrelation("need at least two points")
    mx = math.fsum(x) / n
    my = math.fsum(y) / n
    dx = [v - mx for v in x]
    dy = [v - my for v in y]
    sxx = math.fsum(d * d for d in dx)
    syy = math.fsum(d * d for d in dy)
    if sxx == 0 or syy == 0:
        raise UndefinedCorrelation("zero variance")
    sxy = math.fsum(a * b for a, b in zip(dx, dy))
    r = sxy / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def rankdata(values: Sequence[float]) -> list[float]:
    """1-based ranks, ties sharing their average rank."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    if len(x) != len(y):
        raise UndefinedCorrelation(f"length mismatch: {len(x)} vs {len(y)}")
    return pearson(rankdata(x), rankdata(y))


class SignalWindow(str, enum.Enum):
    GOOGLE_1Y = "Google_1Y"
    GOOGLE_3Y = "Google_3Y"
    GOOGLE_5Y = "Google_5Y"

    @property
    def column(self) -> str:
        return self.value.lower()


@dataclass(frozen=True)
class SignalSeries:
    window: SignalWindow
    values: dict[str, float]


def load_signals(path: Path) -> list[SignalSeries]:
    """Read ``state,google_1y,google_3y,google_5y`` (header required)."""
    series = {w: {} for w in SignalWindow}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = {"state"} | {w.column for w in SignalWindow}
        missing -= set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            state = row["state"].strip().upper()
            for w in SignalWindow:
                value = float(row[w.column])
                if value < 0 or not math.isfinite(value):
                    raise ValueError(f"{path}: bad {w.column} value for {state}")
                series[w][state] = value
    return [SignalSeries(w, series[w]) for w in SignalWindow]


@dataclass
class CorrelationEntry:
    window: SignalWindow
    cohort: str
    n: int
    r: Optional[float]
    reason: Optional[str] = None  # why r is undefined


@dataclass
class CorrelationTable:
    entries: dict[tuple[SignalWindow, str], CorrelationEntry]

    def r(self, window: SignalWindow, cohort: str) -> Optional[float]:
        return self.entries[(window, cohort)].r


DEFAULT_COHORTS = {"all_states": None, "top_10": 10}


def correlation_table(rates: Sequence[StateRate], signals: Sequence[SignalSeries],
                      cohorts: Mapping[str, Optional[int]] = DEFAULT_COHORTS,
                      method: str = "pearson") -> CorrelationTable:
    """Correlate state rates with each search-interest window for every cohort.

    A cohort of ``None`` is every state in ``rates``; an integer ``k`` is the
    top-k states by rate. Vectors run in state-code order. Undefined
    coefficients (constant vectors, too few states) are recorded with a reason.
    """
    corr = {"pearson": pearson, "spearman": spearman}[method]
    by_state = {r.state: r for r in rates}
    entries = {}
    for cohort, k in cohorts.items():
        chosen = by_state.keys() if k is None else [r.state for r in top_n(rates, k)] if rates else []
        states = sorted(chosen)
        for sig in signals:
            missing = [s for s in states if s not in sig.values]
            if missing:
                raise KeyError(f"signal {sig.window.value} lacks states {missing}")
            x = [by_state[s].rate for s in states]
            y = [sig.values[s] for s in states]
            try:
                entry = CorrelationEntry(sig.window, cohort, len(states), corr(x, y))
            except UndefinedCorrelation as exc:
                entry = CorrelationEntry(sig.window, cohort, len(states), None, str(exc))
            entries[(sig.window, cohort)] = entry
    return CorrelationTable(entries)
