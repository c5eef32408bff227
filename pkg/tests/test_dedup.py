import random
from dataclasses import replace
from datetime import timedelta
from decimal import Decimal

import pytest
from hypothesis import given, settings, strategies as st

from adsurveil.dedup import (
    ConfigError,
    PriceBounds,
    dedup,
    dedup_keys,
    filter_outliers,
    is_duplicate,
    normalize_text,
)
from adsurveil.synth import planted_duplicates, random_ad


def brute_force_dedup(ads):
    """O(n^2) reference: components of the pairwise is_duplicate graph, earliest member kept."""
    n = len(ads)
    adj = [[j for j in range(n) if j != i and is_duplicate(ads[i], ads[j])] for i in range(n)]
    seen, kept = set(), set()
    for i in range(n):
        if i in seen:
            continue
        comp, stack = [], [i]
        seen.add(i)
        while stack:
            k = stack.pop()
            comp.append(k)
            for j in adj[k]:
                if j not in seen:
                    seen.add(j)
                    stack.append(j)
        kept.add(min(comp, key=lambda k: (ads[k].posted_at, ads[k].id)))
    return [ads[i] for i in range(n) if i in kept]


def test_normalize_examples():
    assert normalize_text("  Cozy   ROOM!!") == "cozy room"
    assert normalize_text("") == ""
    assert normalize_text("420-Friendly\tapt") == "420 friendly apt"
    assert normalize_text("ＡＰＴ　４２０") == "apt 420"  # full-width forms


@given(st.text())
def test_normalize_idempotent(s):
    once = normalize_text(s)
    assert normalize_text(once) == once
    assert once == once.strip() and "  " not in once


def test_is_duplicate_examples(make_ad):
    a = make_ad("Nice room, utilities included", title="Room", price=Decimal(650), bedrooms=1)
    assert is_duplicate(a, a)
    assert is_duplicate(a, replace(a, id="other"))
    assert is_duplicate(a, replace(a, id="b", title="Totally different title"))
    assert not is_duplicate(a, replace(a, id="c", price=Decimal(700), body="other body"))


def test_empty_bodies_never_content_match(make_ad):
    a = make_ad("", title="A")
    b = make_ad("", title="B")
    assert dedup_keys(a).content_key is None
    assert not is_duplicate(a, b)


def test_title_key_is_normalized(make_ad):
    a = make_ad("x", title="Cozy ROOM!!", price=Decimal("650.00"))
    b = make_ad("y", title="  cozy room ", price=Decimal(650))
    assert is_duplicate(a, b)


def test_three_identical(make_ad):
    a = make_ad("same body", title="Room")
    ads = [a, replace(a, id="x2"), replace(a, id="x3")]
    kept, report = dedup(ads)
    assert len(kept) == 1 and report.duplicates_removed == 2
    assert report.input_count == report.kept_count + report.duplicates_removed


def test_keep_earliest_then_id(make_ad):
    a = make_ad("body", title="Room")
    later = replace(a, id="a0", posted_at=a.posted_at + timedelta(days=1))
    tie = replace(a, id="zz")
    kept, report = dedup([later, tie, a])
    assert [k.id for k in kept] == [a.id]  # t0 < zz, both earlier than a0
    assert report.duplicate_clusters == [(a.id, ["zz", "a0"])]


def test_no_duplicates_all_kept():
    rng = random.Random(3)
    ads = [random_ad(rng, i) for i in range(200)]
    kept, report = dedup(ads)
    assert kept == ads and report.duplicates_removed == 0


def test_transitive_chain_collapses(make_ad):
    a = make_ad("body one", title="Alpha", price=Decimal(500))
    b = replace(a, id="b", body="body two", posted_at=a.posted_at + timedelta(hours=1))  # title dup of a
    c = replace(b, id="c", title="Gamma", posted_at=a.posted_at + timedelta(hours=2))   # content dup of b
    assert not is_duplicate(a, c)
    kept, _ = dedup([c, b, a])
    assert kept == [a] == brute_force_dedup([c, b, a])


def test_planted_duplicates_exact():
    planted = planted_duplicates(n=10_000, title_pairs=500, content_pairs=500, seed=1)
    kept, report = dedup(planted.records)
    assert report.duplicates_removed == 1000
    assert {a.id for a in planted.records} - {a.id for a in kept} == planted.removed_ids


def _ads_with_collisions(seed, n):
    rng = random.Random(seed)
    ads = [random_ad(rng, i) for i in range(n)]
    for i in range(n):
        if rng.random() < 0.3:
            src = rng.choice(ads[:i + 1])
            kind = rng.choice(["title", "body", "both"])
            new = ads[i]
            if kind in ("title", "both"):
                new = replace(new, title=src.title, price=src.price, state=src.state, city=src.city,
                              bedrooms=src.bedrooms)
            if kind in ("body", "both"):
                new = replace(new, body=src.body)
            if rng.random() < 0.2:
                new = replace(new, posted_at=src.posted_at)
            ads[i] = new
    return ads


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(1, 120))
def test_matches_brute_force(seed, n):
    ads = _ads_with_collisions(seed, n)
    kept, report = dedup(ads)
    assert kept == brute_force_dedup(ads)
    report.check()


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6))
def test_idempotent_and_symmetric(seed):
    ads = _ads_with_collisions(seed, 60)
    kept, _ = dedup(ads)
    again, report = dedup(kept)
    assert again == kept and report.duplicates_removed == 0
    for a in ads[:15]:
        assert is_duplicate(a, a)
        for b in ads[:15]:
            assert is_duplicate(a, b) == is_duplicate(b, a)


def test_result_independent_of_input_order():
    ads = _ads_with_collisions(9, 150)
    kept, _ = dedup(ads)
    shuffled = ads[:]
    random.Random(1).shuffle(shuffled)
    kept2, _ = dedup(shuffled)
    assert {a.id for a in kept} == {a.id for a in kept2}


# ---------------------------------------------------------------- outliers

def test_outlier_bounds(make_ad):
    ok = make_ad("a", price=Decimal(650))
    low = make_ad("b", price=Decimal(1))
    free = make_ad("c")
    high = make_ad("d", price=Decimal(250_000))
    kept, report = filter_outliers([ok, low, free, high], PriceBounds(10, 100_000))
    assert kept == [ok, free]
    assert report.outliers_removed == 2 and report.kept_count == 2


def test_bounds_inclusive(make_ad):
    edge = [make_ad("a", price=Decimal(10)), make_ad("b", price=Decimal(100_000))]
    kept, _ = filter_outliers(edge)
    assert kept == edge


@pytest.mark.parametrize("lo,hi", [(100, 100), (500, 10)])
def test_invalid_bounds(lo, hi):
    with pytest.raises(ConfigError):
        PriceBounds(lo, hi)


def test_chained_reports_conserve(make_ad):
    a = make_ad("same", price=Decimal(650))
    ads = [a, replace(a, id="dup"), make_ad("other", price=Decimal(2))]
    kept, r1 = dedup(ads)
    kept, r2 = filter_outliers(kept)
    total = r1.then(r2)
    total.check()
    assert (total.input_count, total.kept_count, total.duplicates_removed, total.outliers_removed) == (3, 1, 1, 1)
