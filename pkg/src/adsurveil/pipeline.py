"""Config-driven end-to-end run: ingest, dedup, outliers, extract, aggregate, report."""

from __future__ import annotations

import json
import logging
import os
import shutil
import tempfile
import time
from contextlib import contextmanager
from dataclasses import dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import Any, Optional

import yaml

from adsurveil import analytics, report
from adsurveil.dedup import ConfigError, FilterReport, PriceBounds, dedup, filter_outliers
from adsurveil.extract import Lexicon, count_by_group, extract_corpus, sorted_hits, write_hits
from adsurveil.ingest import CorpusSource, IngestStats, SourceKind, ingest
from adsurveil.model import AdRecord, GeoKey, Subcategory, TermGroup, parse_timestamp

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1"

DATA_FILES = (
    "rows.csv",
    "hits.jsonl",
    "count_table.csv",
    "count_table.txt",
    "count_table_ads.csv",
    "office_commercial_table.csv",
    "office_commercial_table.txt",
    "polarity.csv",
    "state_rates.csv",
    "choropleth.csv",
    "ranking.csv",
    "correlations.csv",
    "filter_report.json",
)


@dataclass
class PipelineConfig:
    sources: list[CorpusSource]
    out: Path
    population: Optional[Path] = None
    signals: Optional[Path] = None
    lexicon: Optional[Path] = None
    min_price: float = 10
    max_price: float = 100_000
    top_n: int = 10
    normalize_by: analytics.NormalizeBy = analytics.NormalizeBy.POPULATION
    rank_by: str = "rate"
    correlation: str = "pearson"
    since: Optional[datetime] = None
    until: Optional[datetime] = None
    workers: int = 1
    seed: int = 0  # reserved; every stage is deterministic

    @property
    def bounds(self) -> PriceBounds:
        return PriceBounds(self.min_price, self.max_price)

    def validate(self) -> None:
        if not self.sources:
            raise ConfigError("no sources")
        for src in self.sources:
            if not src.path.is_file():
                raise ConfigError(f"source not found: {src.path}")
        self.bounds
        self.normalize_by = analytics.NormalizeBy(self.normalize_by)
        if self.normalize_by is analytics.NormalizeBy.POPULATION and self.population is None:
            raise ConfigError("population file required when normalizing by population")
        for name in ("population", "signals", "lexicon"):
            p = getattr(self, name)
            if p is not None and not Path(p).is_file():
                raise ConfigError(f"{name} file not found: {p}")
        if self.top_n < 1:
            raise ConfigError("top_n must be >= 1")
        if self.rank_by not in ("rate", "ad_count"):
            raise ConfigError(f"rank_by must be rate or ad_count, got {self.rank_by!r}")
        if self.correlation not in ("pearson", "spearman"):
            raise ConfigError(f"correlation must be pearson or spearman, got {self.correlation!r}")
        if self.since and self.until and self.since > self.until:
            raise ConfigError("since is after until")

    def snapshot(self) -> dict[str, Any]:
        def path(p):
            return None if p is None else str(p)

        return {
            "sources": [
                {
                    "kind": s.kind.value,
                    "path": str(s.path),
                    "default_geo": None if s.default_geo is None else
                    {"state": s.default_geo.state, "city": s.default_geo.city},
                    "default_subcategory": s.default_subcategory,
                }
                for s in self.sources
            ],
            "out": str(self.out),
            "population": path(self.population),
            "signals": path(self.signals),
            "lexicon": path(self.lexicon),
            "min_price": str(self.min_price),
            "max_price": str(self.max_price),
            "top_n": self.top_n,
            "normalize_by": analytics.NormalizeBy(self.normalize_by).value,
            "rank_by": self.rank_by,
            "correlation": self.correlation,
            "since": None if self.since is None else self.since.isoformat(),
            "until": None if self.until is None else self.until.isoformat(),
            "workers": self.workers,
            "seed": self.seed,
        }


def source_from_dict(d: dict, base: Path) -> CorpusSource:
    path = Path(d["path"])
    if not path.is_absolute():
        path = base / path
    kind = d.get("kind") or (SourceKind.HTML_CAPTURE if path.suffix.lower() in (".html", ".htm") else SourceKind.RECORD_FILE)
    geo = None
    if d.get("default_state"):
        geo = GeoKey(str(d["default_state"]).upper(), d.get("default_city"))
    return CorpusSource(kind, path, geo, d.get("default_subcategory"))


def load_config(path: Path, **overrides) -> PipelineConfig:
    """Read a YAML config; relative paths resolve against the config's directory.

    Keyword overrides that are not None replace the file's values.
    """
    path = Path(path)
    try:
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    base = path.parent
    data.update({k: v for k, v in overrides.items() if v is not None})

    def resolve(key):
        v = data.get(key)
        if v is None:
            return None
        p = Path(v)
        return p if p.is_absolute() or key in overrides and overrides.get(key) is not None else base / p

    known = set(PipelineConfig.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    sources = data.get("sources") or []
    if sources and not all(isinstance(s, (dict, CorpusSource)) for s in sources):
        raise ConfigError("each source must be a mapping with at least a path")
    return PipelineConfig(
        sources=[s if isinstance(s, CorpusSource) else source_from_dict(s, base) for s in sources],
        out=resolve("out") or base / "out",
        population=resolve("population"),
        signals=resolve("signals"),
        lexicon=resolve("lexicon"),
        min_price=data.get("min_price", 10),
        max_price=data.get("max_price", 100_000),
        top_n=int(data.get("top_n", 10)),
        normalize_by=analytics.NormalizeBy(data.get("normalize_by", "population")),
        rank_by=data.get("rank_by", "rate"),
        correlation=data.get("correlation", "pearson"),
        since=None if data.get("since") is None else parse_timestamp(data["since"]),
        until=None if data.get("until") is None else parse_timestamp(data["until"]),
        workers=int(data.get("workers", 1)),
        seed=int(data.get("seed", 0)),
    )


class PipelineError(RuntimeError):
    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage {stage} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class RunManifest:
    config: dict
    ingest: dict
    filter: dict
    extraction: dict
    correlation: str
    timings: dict[str, float] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": self.config,
            "ingest": self.ingest,
            "filter": self.filter,
            "extraction": self.extraction,
            "correlation": self.correlation,
            "outputs": self.outputs,
            "timings_seconds": self.timings,
        }


def window_filter(records: list[AdRecord], stats: IngestStats, since=None, until=None) -> list[AdRecord]:
    """Keep ads posted within [since, until]; the rest count as ingest skips."""
    if since is None and until is None:
        return records
    kept = [r for r in records if (since is None or r.posted_at >= since) and (until is None or r.posted_at <= until)]
    for _ in range(len(records) - len(kept)):
        stats.records_valid -= 1
        stats.skip("outside_window")
    return kept


@contextmanager
def _stage(name: str, timings: dict):
    t0 = time.perf_counter()
    try:
        yield
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc
    finally:
        timings[name] = round(time.perf_counter() - t0, 6)


def run_pipeline(config: PipelineConfig) -> RunManifest:
    """Run every stage and write outputs into ``config.out``.

    Files are written to a staging directory and renamed into place only after
    all stages succeed, so a failed run leaves no partial data files.
    """
    timings: dict[str, float] = {}
    with _stage("config", timings):
        config.validate()
        lexicon = Lexicon.load(config.lexicon)
        out = Path(config.out)
        out.mkdir(parents=True, exist_ok=True)

    staging = Path(tempfile.mkdtemp(prefix=".staging-", dir=out))
    try:
        with _stage("ingest", timings):
            records, stats = ingest(config.sources)
            records = window_filter(records, stats, config.since, config.until)
        with _stage("dedup", timings):
            kept, dup_report = dedup(records)
        with _stage("outliers", timings):
            kept, out_report = filter_outliers(kept, config.bounds)
            freport: FilterReport = dup_report.then(out_report)
            freport.check()
        with _stage("extract", timings):
            hits_by_ad = extract_corpus(kept, lexicon, workers=config.workers)
            hits = sorted_hits(hits_by_ad)
        with _stage("aggregate", timings):
            rows = analytics.build_rows(kept, hits_by_ad)
            table = analytics.count_table(rows, workers=config.workers)
            ad_table = analytics.count_table(rows, per_ad=True, workers=config.workers)
            office = analytics.count_table_by_state(rows, [Subcategory.OFFICE_COMMERCIAL], workers=config.workers)
            population = analytics.load_population(config.population) if config.population else {}
            rates = analytics.state_rates(rows, population, config.normalize_by)
            ranking = analytics.top_n(rates, config.top_n, by=config.rank_by) if rates else []
        corr_status = "skipped"
        corr_table = None
        if config.signals is not None:
            with _stage("correlate", timings):
                signals = analytics.load_signals(config.signals)
                cohorts = {"all_states": None, f"top_{config.top_n}": config.top_n}
                corr_table = analytics.correlation_table(rates, signals, cohorts, method=config.correlation)
                corr_status = "computed"
        with _stage("report", timings):
            report.emit_rows(rows, staging / "rows.csv")
            write_hits(hits, staging / "hits.jsonl")
            report.emit_count_table(table, staging / "count_table.csv", staging / "count_table.txt",
                                    title="Term group occurrences by housing subcategory")
            report.emit_count_table(ad_table, staging / "count_table_ads.csv")
            report.emit_count_table(office, staging / "office_commercial_table.csv",
                                    staging / "office_commercial_table.txt",
                                    title="Term group occurrences in office & commercial ads by state")
            report.emit_polarity(analytics.polarity_table(hits), staging / "polarity.csv")
            report.emit_state_rates(rates, staging / "state_rates.csv")
            report.emit_choropleth(rates, staging / "choropleth.csv")
            report.emit_ranking_chart_data(ranking, staging / "ranking.csv", by=config.rank_by)
            if corr_table is not None:
                report.emit_correlations(corr_table, staging / "correlations.csv")
            _write_json(staging / "filter_report.json", freport.to_dict())

            totals = count_by_group(hits)
            manifest = RunManifest(
                config=config.snapshot(),
                ingest=stats.to_dict(),
                filter=freport.to_dict(clusters=False),
                extraction={
                    "occurrences": {g.value: totals[g] for g in TermGroup},
                    "ads_with_group": {g.value: ad_table.totals[g] for g in TermGroup},
                    "ads_with_any_hit": sum(1 for r in rows if r.has_hit),
                    "total_hits": len(hits),
                    "rules": lexicon.rule_names(),
                },
                correlation=corr_status,
            )
            _check_manifest(manifest, table, rates)
            written = sorted(p.name for p in staging.iterdir())
            manifest.outputs = written + ["manifest.json"]
            manifest.timings = timings
            _write_json(staging / "manifest.json", manifest.to_dict())

        for name in written + ["manifest.json"]:
            os.replace(staging / name, out / name)
        if corr_table is None:
            stale = out / "correlations.csv"
            if stale.exists():
                stale.unlink()
        log.info("run complete: %d kept ads, %d hits", freport.kept_count, len(hits))
        return manifest
    finally:
        shutil.rmtree(staging, ignore_errors=True)


def _check_manifest(manifest: RunManifest, table, rates) -> None:
    occ = manifest.extraction["occurrences"]
    if any(occ[g.value] != table.totals[g] for g in TermGroup):
        raise AssertionError("manifest occurrences differ from count table totals")
    if manifest.extraction["ads_with_any_hit"] != sum(r.ad_count for r in rates):
        raise AssertionError("manifest hit-ad total differs from state rates")


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(data, indent=2, sort_keys=False) + "\n", encoding="utf-8")


def with_overrides(config: PipelineConfig, **kw) -> PipelineConfig:
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
