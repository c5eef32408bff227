"""Synthetic rental-ad corpora with planted duplicates, term counts and decoys.

Generators return the records together with what was planted, so tests can
compare pipeline output against the planting rather than against itself.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from datetime import datetime, timedelta, timezone
from decimal import Decimal
from typing import Mapping, Optional

from adsurveil.model import STATE_CODES, AdRecord, Subcategory, TermGroup

EPOCH = datetime(2016, 5, 1, tzinfo=timezone.utc)

CITIES = {
    "CO": ["Denver", "Boulder", "Fort Collins"], "WA": ["Seattle", "Spokane"], "OR": ["Portland", "Eugene"],
    "AK": ["Anchorage"], "CA": ["Los Angeles", "San Francisco", "San Diego"], "TX": ["Austin", "Houston"],
    "FL": ["Miami", "Tampa", "Orlando"], "NV": ["Las Vegas", "Reno"], "NY": ["New York", "Buffalo"],
}

ADJECTIVES = ["Cozy", "Sunny", "Spacious", "Quiet", "Bright", "Modern", "Charming", "Clean", "Large", "Updated"]
PLACES = ["room", "studio", "apartment", "suite", "loft", "bedroom", "house", "duplex", "townhome", "office"]
NEAR = ["downtown", "the park", "campus", "light rail", "the river", "shopping", "the hospital", "old town"]
FILLER = [
    "Utilities included.", "Washer and dryer in unit.", "Off-street parking available.", "Pets negotiable.",
    "Close to bus lines.", "Quiet neighborhood.", "Month to month lease.", "Available June 1.",
    "Hardwood floors throughout.", "Shared kitchen and bath.", "No smoking inside.", "Deposit required.",
]

# Phrases yielding exactly one hit of the given group.
PLANT_PHRASES: dict[TermGroup, list[str]] = {
    TermGroup.T1_420_FRIENDLY: ["We are 420 friendly.", "420 is ok here.", "420 is allowed.", "420-friendly house.",
                                "420 ok.", "No 420 please.", "Is 420 allowed? Yes."],
    TermGroup.T2_MARIJUANA: ["Marijuana use is fine outdoors.", "No marijuana.", "Near a marijuana dispensary."],
    TermGroup.T3_MMJ: ["MMJ ok.", "mmj patients welcome.", "No mmj grows."],
    TermGroup.T4_CANNABIS: ["Cannabis friendly.", "Cannabis growers welcome.", "No cannabis."],
    TermGroup.T5_POT: ["Pot ok on the patio.", "No pot smoking.", "Pot is fine."],
}

# Phrases containing "420" or "pot" that must produce no hit.
DECOY_PHRASES = [
    "Located in APT 420.", "Unit 420 is ready.", "Rent is 420 bucks per month.", "Call 555-420-1234 anytime.",
    "Text me at 303.420.9876 please.", "Visit #420 on the second floor.", "Only $420 deposit.",
    "Office at 420 Main St, ok for retail.", "Open house at 4:20 pm.", "Coffee pot provided.",
    "Crock pot included.", "Suite 420 is fine for two desks.",
]


def ad_id(i: int) -> str:
    return f"ad{i:07d}"


def _city(rng: random.Random, state: str) -> str:
    return rng.choice(CITIES.get(state, [f"{state} City", f"North {state}"]))


def random_ad(rng: random.Random, i: int, state: Optional[str] = None, subcategory: Optional[Subcategory] = None,
              extra: str = "") -> AdRecord:
    """A plain ad with no marijuana terms; title and body are unique per ``i``."""
    state = state or rng.choice(STATE_CODES)
    subcategory = subcategory or rng.choice(list(Subcategory))
    bedrooms = rng.choice([None, 0, 1, 1, 2, 2, 3, 4])
    price = None if rng.random() < 0.1 else Decimal(rng.randrange(300, 3000, 5))
    title = f"{rng.choice(ADJECTIVES)} {rng.choice(PLACES)} near {rng.choice(NEAR)}, ref {i}"
    body = " ".join(rng.sample(FILLER, 3)) + f" Listing number {i}."
    if extra:
        body += " " + extra
    return AdRecord(
        id=ad_id(i),
        title=title,
        state=state,
        city=_city(rng, state),
        subcategory=subcategory,
        posted_at=EPOCH + timedelta(minutes=rng.randrange(0, 60 * 24 * 30)),
        body=body,
        price=price,
        bedrooms=bedrooms,
        url=f"https://example.org/{state.lower()}/{i}.html",
    )


@dataclass
class PlantedDuplicates:
    records: list[AdRecord]
    removed_ids: set[str]


def planted_duplicates(n: int = 10_000, title_pairs: int = 500, content_pairs: int = 500,
                       seed: int = 0) -> PlantedDuplicates:
    """``n`` ads of which ``title_pairs + content_pairs`` are later copies of distinct originals.

    Title copies share title, price, location and bedrooms but get a new body;
    content copies share the body under a new title.
    """
    rng = random.Random(seed)
    pairs = title_pairs + content_pairs
    base = [random_ad(rng, i) for i in range(n - pairs)]
    originals = rng.sample(base, pairs)
    copies, removed = [], set()
    for k, orig in enumerate(originals):
        i = n - pairs + k
        later = orig.posted_at + timedelta(hours=rng.randint(1, 48))
        if k < title_pairs:
            copy = replace(orig, id=ad_id(i), posted_at=later, body=f"Fresh description {i}. " + rng.choice(FILLER))
        else:
            copy = replace(orig, id=ad_id(i), posted_at=later, title=f"Reposted listing {i}",
                           price=Decimal(rng.randrange(300, 3000, 5)))
        copies.append(copy)
        removed.add(copy.id)
    records = base + copies
    rng.shuffle(records)
    return PlantedDuplicates(records, removed)


def planted_counts(matrix: Mapping[Subcategory, Mapping[TermGroup, int]], seed: int = 0,
                   filler_ads: int = 50, decoy_rate: float = 0.5, state: str = "CO") -> list[AdRecord]:
    """Ads whose term hits add up to ``matrix`` exactly, with decoys mixed in.

    Each ad carries one to three planted phrases; a share of ads also carry a
    decoy phrase that must not count.
    """
    rng = random.Random(seed)
    ads: list[AdRecord] = []
    i = 0
    for sub, row in matrix.items():
        pending = [g for g, c in row.items() for _ in range(c)]
        rng.shuffle(pending)
        while pending:
            take = min(len(pending), rng.randint(1, 3))
            phrases = [rng.choice(PLANT_PHRASES[g]) for g in pending[:take]]
            del pending[:take]
            if rng.random() < decoy_rate:
                phrases.insert(rng.randrange(len(phrases) + 1), rng.choice(DECOY_PHRASES))
            ads.append(random_ad(rng, i, state=state, subcategory=sub, extra=" ".join(phrases)))
            i += 1
    for _ in range(filler_ads):
        extra = rng.choice(DECOY_PHRASES) if rng.random() < decoy_rate else ""
        ads.append(random_ad(rng, i, state=state, extra=extra))
        i += 1
    rng.shuffle(ads)
    return ads


def scale_corpus(n: int = 200_000, seed: int = 0, hit_rate: float = 0.05, dup_rate: float = 0.02,
                 outlier_rate: float = 0.005) -> list[AdRecord]:
    """A large mixed corpus across all states: term ads, decoys, duplicates, outlier prices."""
    rng = random.Random(seed)
    n_dups = int(n * dup_rate)
    ads = []
    for i in range(n - n_dups):
        r = rng.random()
        extra = ""
        if r < hit_rate:
            group = rng.choice(list(TermGroup))
            extra = rng.choice(PLANT_PHRASES[group])
        elif r < hit_rate * 2:
            extra = rng.choice(DECOY_PHRASES)
        ad = random_ad(rng, i, extra=extra)
        if rng.random() < outlier_rate:
            ad = replace(ad, price=Decimal(rng.choice([1, 2, 5, 250_000, 999_999])))
        ads.append(ad)
    for k in range(n_dups):
        orig = ads[rng.randrange(n - n_dups)]
        ads.append(replace(orig, id=ad_id(n - n_dups + k), posted_at=orig.posted_at + timedelta(hours=1)))
    return ads


def synthetic_signals(rates: Mapping[str, float], seed: int = 0, noise: float = 0.3) -> dict[str, tuple[float, float, float]]:
    """Per-state (1y, 3y, 5y) interest scores loosely tied to ``rates``, on a 0-100 scale."""
    rng = random.Random(seed)
    top = max(rates.values(), default=0) or 1.0
    out = {}
    for state in sorted(rates):
        base = 100 * rates[state] / top
        out[state] = tuple(round(max(0.0, base * (1 - noise) + 100 * noise * rng.random()), 2) for _ in range(3))
    return out
