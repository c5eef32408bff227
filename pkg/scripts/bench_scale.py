"""Generate a synthetic corpus and time a full pipeline run.

    python3 scripts/bench_scale.py --ads 200000 --workers 1 --dir /tmp/adsurveil-bench
"""

import argparse
import json
import time
from pathlib import Path

import yaml

from adsurveil.ingest import write_records
from adsurveil.pipeline import load_config, run_pipeline
from adsurveil.synth import scale_corpus

ROOT = Path(__file__).resolve().parents[1]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--ads", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--dir", type=Path, default=Path("/tmp/adsurveil-bench"))
    args = p.parse_args()

    args.dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    write_records(scale_corpus(args.ads, seed=args.seed), args.dir / "corpus.jsonl")
    print(f"generated {args.ads} ads in {time.perf_counter() - t0:.1f}s")
    (args.dir / "config.yaml").write_text(yaml.safe_dump({
        "sources": [{"path": "corpus.jsonl"}],
        "population": str(ROOT / "data" / "us_population_2010.csv"),
        "out": "out",
        "workers": args.workers,
    }))
    t0 = time.perf_counter()
    manifest = run_pipeline(load_config(args.dir / "config.yaml"))
    print(f"pipeline: {time.perf_counter() - t0:.1f}s")
    print(json.dumps({"timings": manifest.timings, "filter": manifest.filter}, indent=2))


if __name__ == "__main__":
    main()
