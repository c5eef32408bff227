"""``adsurveil`` command line: the full ``run`` plus one subcommand per stage."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from pathlib import Path

from adsurveil import analytics, report
from adsurveil.dedup import ConfigError, PriceBounds, dedup, filter_outliers
from adsurveil.extract import Lexicon, LexiconError, extract_corpus, read_hits, sorted_hits, write_hits
from adsurveil.ingest import CorpusSource, IngestStats, SourceError, ingest, read_record_file, write_records
from adsurveil.model import GeoKey, Subcategory, parse_timestamp
from adsurveil.pipeline import PipelineError, load_config, run_pipeline, source_from_dict, window_filter

log = logging.getLogger("adsurveil")

_LEVELS = {"error": logging.ERROR, "warn": logging.WARNING, "warning": logging.WARNING,
           "info": logging.INFO, "debug": logging.DEBUG}


def _setup_logging() -> None:
    level = _LEVELS.get(os.environ.get("ADSURVEIL_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _out_dir(path: str) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2) + "\n", encoding="utf-8")


def _records(path: str):
    stats = IngestStats()
    records = list(read_record_file(CorpusSource("record_file", Path(path)), stats))
    return records, stats


def cmd_ingest(args) -> int:
    if args.config:
        config = load_config(args.config)
        sources = config.sources
    else:
        geo = GeoKey(args.default_state.upper(), args.default_city) if args.default_state else None
        sources = [source_from_dict({"path": p, "kind": args.kind}, Path.cwd()) for p in args.sources]
        sources = [CorpusSource(s.kind, s.path, geo, args.default_subcategory) for s in sources]
    if not sources:
        raise ConfigError("no sources")
    records, stats = ingest(sources)
    since = parse_timestamp(args.since) if args.since else None
    until = parse_timestamp(args.until) if args.until else None
    records = window_filter(records, stats, since, until)
    out = _out_dir(args.out)
    write_records(records, out / "records.jsonl")
    _write_json(out / "ingest_stats.json", stats.to_dict())
    print(json.dumps(stats.to_dict()))
    return 0


def cmd_dedup(args) -> int:
    records, _ = _records(args.records)
    kept, dup_report = dedup(records)
    kept, out_report = filter_outliers(kept, PriceBounds(args.min_price, args.max_price))
    freport = dup_report.then(out_report)
    out = _out_dir(args.out)
    write_records(kept, out / "filtered.jsonl")
    _write_json(out / "filter_report.json", freport.to_dict())
    print(json.dumps(freport.to_dict(clusters=False)))
    return 0


def cmd_extract(args) -> int:
    records, _ = _records(args.records)
    lexicon = Lexicon.load(args.lexicon)
    hits_by_ad = extract_corpus(records, lexicon, workers=args.workers)
    out = _out_dir(args.out)
    hits = sorted_hits(hits_by_ad)
    write_hits(hits, out / "hits.jsonl")
    report.emit_rows(analytics.build_rows(records, hits_by_ad), out / "rows.csv")
    print(json.dumps({"ads": len(records), "hits": len(hits)}))
    return 0


def cmd_aggregate(args) -> int:
    records, _ = _records(args.records)
    hits_by_ad: dict = {}
    for h in read_hits(Path(args.hits)):
        hits_by_ad.setdefault(h.ad_id, []).append(h)
    rows = analytics.build_rows(records, hits_by_ad)
    out = _out_dir(args.out)
    table = analytics.count_table(rows)
    print(report.emit_count_table(table, out / "count_table.csv", out / "count_table.txt"), end="")
    report.emit_count_table(analytics.count_table(rows, per_ad=True), out / "count_table_ads.csv")
    office = analytics.count_table_by_state(rows, [Subcategory.OFFICE_COMMERCIAL])
    report.emit_count_table(office, out / "office_commercial_table.csv", out / "office_commercial_table.txt")
    population = analytics.load_population(Path(args.population)) if args.population else {}
    rates = analytics.state_rates(rows, population, args.normalize_by)
    report.emit_state_rates(rates, out / "state_rates.csv")
    report.emit_choropleth(rates, out / "choropleth.csv")
    report.emit_ranking_chart_data(analytics.top_n(rates, args.top_n, args.rank_by), out / "ranking.csv", args.rank_by)
    return 0


def read_state_rates(path: Path) -> list[analytics.StateRate]:
    rates = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            count, denom = int(row["ad_count"]), int(row["population"])
            rates.append(analytics.StateRate(row["state"], count, denom, count * analytics.PER / denom))
    return rates


def cmd_correlate(args) -> int:
    rates = read_state_rates(Path(args.rates))
    signals = analytics.load_signals(Path(args.signals))
    cohorts = {"all_states": None, f"top_{args.top_n}": args.top_n}
    table = analytics.correlation_table(rates, signals, cohorts, method=args.method)
    out = _out_dir(args.out)
    report.emit_correlations(table, out / "correlations.csv")
    sys.stdout.write((out / "correlations.csv").read_text(encoding="utf-8"))
    return 0


def cmd_report(args) -> int:
    out = Path(args.dir)
    for name in ("count_table.txt", "office_commercial_table.txt"):
        if (out / name).exists():
            print((out / name).read_text(encoding="utf-8"))
    for name, title in (("ranking.csv", "Ranking"), ("correlations.csv", "Correlations")):
        if (out / name).exists():
            print(title)
            for row in report.read_csv_rows(out / name):
                print("  " + "  ".join(f"{k}={v}" for k, v in row.items()))
    manifest = out / "manifest.json"
    if manifest.exists():
        m = json.loads(manifest.read_text(encoding="utf-8"))
        f = m["filter"]
        print(f"ads read {m['ingest']['records_read']}, kept {f['kept_count']}, "
              f"duplicates {f['duplicates_removed']}, outliers {f['outliers_removed']}, "
              f"correlation {m['correlation']}")
    return 0


def cmd_run(args) -> int:
    config = load_config(
        args.config,
        min_price=args.min_price,
        max_price=args.max_price,
        population=args.population,
        signals=args.signals,
        out=args.out,
        normalize_by=args.normalize_by,
        top_n=args.top_n,
        since=args.since,
        until=args.until,
        workers=args.workers,
        lexicon=args.lexicon,
    )
    manifest = run_pipeline(config)
    f = manifest.filter
    print(f"kept {f['kept_count']} of {f['input_count']} ads "
          f"({f['duplicates_removed']} duplicates, {f['outliers_removed']} outliers); "
          f"{manifest.extraction['total_hits']} term hits; correlation {manifest.correlation}; "
          f"outputs in {config.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adsurveil", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def window(sp):
        sp.add_argument("--since", help="keep ads posted at or after this ISO-8601 time")
        sp.add_argument("--until", help="keep ads posted at or before this ISO-8601 time")

    sp = sub.add_parser("run", help="full pipeline from a config file")
    sp.add_argument("--config", required=True)
    sp.add_argument("--min-price", type=float)
    sp.add_argument("--max-price", type=float)
    sp.add_argument("--population")
    sp.add_argument("--signals")
    sp.add_argument("--lexicon")
    sp.add_argument("--out")
    sp.add_argument("--normalize-by", choices=["population", "listings"])
    sp.add_argument("--top-n", type=int)
    sp.add_argument("--workers", type=int)
    window(sp)
    sp.set_defaults(func=cmd_run)

    sp = sub.add_parser("ingest", help="parse sources into records.jsonl")
    sp.add_argument("sources", nargs="*")
    sp.add_argument("--config")
    sp.add_argument("--kind", choices=["record_file", "html_capture"])
    sp.add_argument("--default-state")
    sp.add_argument("--default-city")
    sp.add_argument("--default-subcategory")
    sp.add_argument("--out", default=".")
    window(sp)
    sp.set_defaults(func=cmd_ingest)

    sp = sub.add_parser("dedup", help="remove duplicates and price outliers")
    sp.add_argument("--records", required=True)
    sp.add_argument("--min-price", type=float, default=10)
    sp.add_argument("--max-price", type=float, default=100_000)
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_dedup)

    sp = sub.add_parser("extract", help="write term hits and dataset rows")
    sp.add_argument("--records", required=True)
    sp.add_argument("--lexicon")
    sp.add_argument("--workers", type=int, default=1)
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_extract)

    sp = sub.add_parser("aggregate", help="count tables, state rates, choropleth and ranking")
    sp.add_argument("--records", required=True)
    sp.add_argument("--hits", required=True)
    sp.add_argument("--population")
    sp.add_argument("--normalize-by", choices=["population", "listings"], default="population")
    sp.add_argument("--top-n", type=int, default=10)
    sp.add_argument("--rank-by", choices=["rate", "ad_count"], default="rate")
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_aggregate)

    sp = sub.add_parser("correlate", help="correlate state rates with search-interest signals")
    sp.add_argument("--rates", required=True)
    sp.add_argument("--signals", required=True)
    sp.add_argument("--top-n", type=int, default=10)
    sp.add_argument("--method", choices=["pearson", "spearman"], default="pearson")
    sp.add_argument("--out", default=".")
    sp.set_defaults(func=cmd_correlate)

    sp = sub.add_parser("report", help="print the text tables of an output directory")
    sp.add_argument("dir")
    sp.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PipelineError as exc:
        print(f"adsurveil: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, LexiconError, SourceError, analytics.MissingPopulationError, ValueError, KeyError) as exc:
        print(f"adsurveil: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
