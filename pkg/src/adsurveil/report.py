"""Delimited and text renderings of pipeline outputs.

All files use ``\\n`` line endings and fixed column orders so that identical
inputs give byte-identical files.
"""

from __future__ import annotations

import csv
from pathlib import Path
from typing import Iterable, Sequence

from adsurveil.analytics import (
    ROW_COLUMNS,
    ROWS_SCHEMA,
    CorrelationTable,
    CountTable,
    ExtractionRow,
    StateRate,
)
from adsurveil.extract import Polarity
from adsurveil.model import STATE_CODES, Subcategory, TermGroup

COUNT_COLUMNS = [g.column for g in TermGroup]


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def _rate(value: float) -> str:
    return f"{value:.6f}"


def emit_rows(rows: Iterable[ExtractionRow], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema={ROWS_SCHEMA}\n")
        w = _writer(fh)
        w.writerow(ROW_COLUMNS)
        for r in rows:
            w.writerow(r.as_csv())


def _label(key: str, table: CountTable) -> str:
    if table.row_label == "subcategory":
        try:
            return Subcategory(key).label
        except ValueError:
            pass
    return key


def render_count_table(table: CountTable, title: str = "Term group counts") -> str:
    """Fixed-width text layout: one row per label, T1-T5 columns, TOTAL row."""
    heads = ["T1", "T2", "T3", "T4", "T5"]
    labels = [_label(k, table) for k in table.rows] + ["TOTAL"]
    width = max([len(table.row_label)] + [len(s) for s in labels])
    cells = [[str(v[g]) for g in TermGroup] for v in table.rows.values()]
    cells.append([str(table.totals[g]) for g in TermGroup])
    cw = max([6] + [len(c) for row in cells for c in row])
    sep = "-" * (width + (cw + 3) * len(heads) + 1)
    lines = [title, sep, table.row_label.ljust(width) + " |" + "|".join(h.rjust(cw + 1) + " " for h in heads), sep]
    for label, row in zip(labels, cells):
        if label == "TOTAL":
            lines.append(sep)
        lines.append(label.ljust(width) + " |" + "|".join(c.rjust(cw + 1) + " " for c in row))
    lines.append(sep)
    lines.append("T1 = 420 friendly, T2 = marijuana, T3 = mmj, T4 = cannabis, T5 = pot")
    return "\n".join(lines) + "\n"


def emit_count_table(table: CountTable, path: Path, text_path: Path | None = None, title: str = "Term group counts") -> str:
    """Write ``<row_label>,t1_420_friendly,...,t5_pot`` plus a TOTAL row; returns the text rendering."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow([table.row_label] + COUNT_COLUMNS)
        for key, counts in table.rows.items():
            w.writerow([key] + [counts[g] for g in TermGroup])
        w.writerow(["TOTAL"] + [table.totals[g] for g in TermGroup])
    text = render_count_table(table, title)
    if text_path is not None:
        Path(text_path).write_text(text, encoding="utf-8")
    return text


def emit_state_rates(rates: Iterable[StateRate], path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["state", "ad_count", "population", "rate_per_100k"])
        for r in rates:
            w.writerow([r.state, r.ad_count, r.population, _rate(r.rate)])


def emit_choropleth(rates: Iterable[StateRate], path: Path) -> None:
    """``state,value`` for all 50 states and DC; states without a rate get 0."""
    values = {r.state: r.rate for r in rates}
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["state", "value"])
        for state in STATE_CODES:
            w.writerow([state, _rate(values.get(state, 0.0))])


def emit_ranking_chart_data(ranking: Sequence[StateRate], path: Path, by: str = "rate") -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["rank", "state", "metric_value"])
        for i, r in enumerate(ranking, 1):
            w.writerow([i, r.state, _rate(r.rate) if by == "rate" else r.ad_count])


def emit_correlations(table: CorrelationTable, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["window", "cohort", "n", "r"])
        for (window, cohort), e in table.entries.items():
            w.writerow([window.value, cohort, e.n, "NA" if e.r is None else f"{e.r:.12f}"])


def emit_polarity(ptable, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = _writer(fh)
        w.writerow(["term_group"] + [p.value for p in Polarity])
        for g in TermGroup:
            w.writerow([g.column] + [ptable[g][p] for p in Polarity])


def read_csv_rows(path: Path) -> list[dict]:
    """Load a data file written by this module, skipping ``#`` header lines."""
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [line for line in fh if not line.startswith("#")]
    return list(csv.DictReader(lines))
