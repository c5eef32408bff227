"""Regenerate the bundled 200-ad golden fixture under tests/data/golden/.

The fixture is committed; rerun only when the synthetic generator changes,
then re-bless tests/data/golden/expected/ with ``--bless``.
"""

import argparse
import html
import random
import shutil
from dataclasses import replace
from datetime import timedelta
from decimal import Decimal
from pathlib import Path

from adsurveil.ingest import write_records
from adsurveil.model import STATE_CODES, Subcategory, TermGroup
from adsurveil.synth import DECOY_PHRASES, PLANT_PHRASES, random_ad

ROOT = Path(__file__).resolve().parents[1]
GOLDEN = ROOT / "tests" / "data" / "golden"
STATES = ["CO", "WA", "OR", "AK", "CA", "TX", "FL", "NV", "NY", "IL", "GA", "AZ"]


def build(seed=2016):
    rng = random.Random(seed)
    ads = []
    for i in range(172):
        state = rng.choice(STATES)
        extra = []
        if rng.random() < 0.35:
            for _ in range(rng.randint(1, 2)):
                extra.append(rng.choice(PLANT_PHRASES[rng.choice(list(TermGroup))]))
        if rng.random() < 0.2:
            extra.append(rng.choice(DECOY_PHRASES))
        ads.append(random_ad(rng, i, state=state, extra=" ".join(extra)))
    # a few outliers and planted duplicates
    for k in (3, 40, 77):
        ads[k] = replace(ads[k], price=Decimal(rng.choice([1, 500_000])))
    for j, k in enumerate((5, 11, 19, 23, 31, 60, 88, 120)):
        orig = ads[k]
        later = orig.posted_at + timedelta(hours=2)
        if j % 2:
            ads.append(replace(orig, id=f"dup{j}", posted_at=later, title="Reposted: " + orig.title))
        else:
            ads.append(replace(orig, id=f"dup{j}", posted_at=later, body="Reposted. " + orig.body))
    return ads


def capture_html(rng):
    rows = []
    for i in range(20):
        ad = random_ad(rng, 9000 + i, state="CO", subcategory=Subcategory.ROOMS_SHARES)
        extra = rng.choice(PLANT_PHRASES[rng.choice(list(TermGroup))]) if i % 3 == 0 else ""
        title = ad.title + (" - " + extra if extra else "")
        price = "" if ad.price is None else f'<span class="result-price">${ad.price:,}</span>'
        rows.append(
            f'  <li class="result-row" data-pid="cap{i:03d}">\n'
            f'    <a href="{ad.url}" class="result-title hdrlnk">{html.escape(title)}</a>\n'
            f'    <time class="result-date" datetime="{ad.posted_at:%Y-%m-%d %H:%M}">May</time>\n'
            f"    {price}\n"
            f'    <span class="result-hood"> (Denver)</span>\n'
            f'    <span class="banish icon">x</span>\n'
            f"  </li>\n"
        )
    return (
        "<html><body>\n"
        '<ul class="rows" data-state="CO" data-subcategory="rooms &amp; shares">\n'
        + "".join(rows)
        + "</ul>\n</body></html>\n"
    )


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--bless", action="store_true", help="run the pipeline and store its data files as expected output")
    args = ap.parse_args()
    GOLDEN.mkdir(parents=True, exist_ok=True)
    write_records(build(), GOLDEN / "corpus.jsonl")
    (GOLDEN / "capture.html").write_text(capture_html(random.Random(7)), encoding="utf-8")
    shutil.copy(ROOT / "data" / "us_population_2010.csv", GOLDEN / "population.csv")
    rng = random.Random(11)
    with open(GOLDEN / "signals.csv", "w", encoding="utf-8") as fh:
        fh.write("state,google_1y,google_3y,google_5y\n")
        legal = {"CO": 95, "WA": 88, "OR": 90, "AK": 70, "CA": 75, "NV": 55}
        for s in STATE_CODES:
            base = legal.get(s, 30)
            fh.write(f"{s},{base + rng.uniform(-8, 8):.1f},{base + rng.uniform(-8, 8):.1f},{base + rng.uniform(-8, 8):.1f}\n")
    (GOLDEN / "config.yaml").write_text(
        "sources:\n"
        "  - kind: record_file\n"
        "    path: corpus.jsonl\n"
        "  - kind: html_capture\n"
        "    path: capture.html\n"
        "population: population.csv\n"
        "signals: signals.csv\n"
        "min_price: 10\n"
        "max_price: 100000\n"
        "top_n: 10\n"
        "normalize_by: population\n"
        "out: out\n",
        encoding="utf-8",
    )
    if args.bless:
        from adsurveil.pipeline import DATA_FILES, load_config, run_pipeline

        expected = GOLDEN / "expected"
        tmp = GOLDEN / "out"
        run_pipeline(load_config(GOLDEN / "config.yaml", out=str(tmp)))
        expected.mkdir(exist_ok=True)
        for name in DATA_FILES:
            if (tmp / name).exists():
                shutil.copy(tmp / name, expected / name)
        shutil.rmtree(tmp)
    print(f"wrote golden fixture to {GOLDEN}")


if __name__ == "__main__":
    main()
