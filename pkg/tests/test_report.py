from adsurveil.analytics import (
    CorrelationEntry,
    CorrelationTable,
    SignalWindow,
    StateRate,
    count_table,
)
from adsurveil.model import STATE_CODES, Subcategory, TermGroup
from adsurveil.report import (
    emit_choropleth,
    emit_correlations,
    emit_count_table,
    emit_ranking_chart_data,
    emit_state_rates,
    read_csv_rows,
)

from test_analytics import row


def test_all_zero_table(tmp_path):
    text = emit_count_table(count_table([]), tmp_path / "t.csv")
    lines = (tmp_path / "t.csv").read_text().splitlines()
    assert lines[0] == "subcategory,t1_420_friendly,t2_marijuana,t3_mmj,t4_cannabis,t5_pot"
    assert len(lines) == 1 + 5 + 1 and lines[-1] == "TOTAL,0,0,0,0,0"
    assert "rooms & shares" in text and "TOTAL" in text


def test_single_cell_table(tmp_path):
    rows = [row(i, counts=(1, 0, 0, 0, 0)) for i in range(7)]
    emit_count_table(count_table(rows), tmp_path / "t.csv", tmp_path / "t.txt")
    data = read_csv_rows(tmp_path / "t.csv")
    by = {d["subcategory"]: d for d in data}
    assert by["rooms_shares"]["t1_420_friendly"] == "7"
    assert by["TOTAL"]["t1_420_friendly"] == "7"
    nonzero = [(k, c) for k, d in by.items() if k != "TOTAL" for c, v in d.items() if c != "subcategory" and v != "0"]
    assert nonzero == [("rooms_shares", "t1_420_friendly")]
    assert (tmp_path / "t.txt").read_text().count("\n") > 5


def test_state_rates_format(tmp_path):
    emit_state_rates([StateRate("CO", 50, 5_000_000, 1.0)], tmp_path / "r.csv")
    assert (tmp_path / "r.csv").read_text() == "state,ad_count,population,rate_per_100k\nCO,50,5000000,1.000000\n"


def test_choropleth_one_state(tmp_path):
    emit_choropleth([StateRate("CO", 50, 5_000_000, 1.0)], tmp_path / "c.csv")
    data = read_csv_rows(tmp_path / "c.csv")
    assert len(data) == 51 and [d["state"] for d in data] == list(STATE_CODES)
    assert {d["state"]: d["value"] for d in data if d["value"] != "0.000000"} == {"CO": "1.000000"}


def test_choropleth_empty(tmp_path):
    emit_choropleth([], tmp_path / "c.csv")
    data = read_csv_rows(tmp_path / "c.csv")
    assert len(data) == 51 and all(d["value"] == "0.000000" for d in data)


def test_ranking(tmp_path):
    ranking = [StateRate("CO", 5, 100_000, 5.0), StateRate("FL", 3, 100_000, 3.0)]
    emit_ranking_chart_data(ranking, tmp_path / "k.csv")
    assert (tmp_path / "k.csv").read_text() == "rank,state,metric_value\n1,CO,5.000000\n2,FL,3.000000\n"
    emit_ranking_chart_data(ranking, tmp_path / "k2.csv", by="ad_count")
    assert (tmp_path / "k2.csv").read_text().splitlines()[1] == "1,CO,5"


def test_empty_ranking_is_header_only(tmp_path):
    emit_ranking_chart_data([], tmp_path / "k.csv")
    assert (tmp_path / "k.csv").read_text() == "rank,state,metric_value\n"


def test_correlations_na(tmp_path):
    table = CorrelationTable({
        (SignalWindow.GOOGLE_1Y, "all_states"): CorrelationEntry(SignalWindow.GOOGLE_1Y, "all_states", 51, 0.5),
        (SignalWindow.GOOGLE_3Y, "all_states"): CorrelationEntry(SignalWindow.GOOGLE_3Y, "all_states", 2, None, "zero variance"),
    })
    emit_correlations(table, tmp_path / "c.csv")
    assert (tmp_path / "c.csv").read_text().splitlines()[1:] == [
        "Google_1Y,all_states,51,0.500000000000", "Google_3Y,all_states,2,NA"]


def test_office_rows_label(tmp_path):
    from adsurveil.analytics import count_table_by_state
    t = count_table_by_state([row(0, "OR", Subcategory.OFFICE_COMMERCIAL, (0, 1, 0, 0, 0))],
                             [Subcategory.OFFICE_COMMERCIAL])
    emit_count_table(t, tmp_path / "o.csv")
    assert (tmp_path / "o.csv").read_text().splitlines() == [
        "state," + ",".join(g.column for g in TermGroup), "OR,0,1,0,0,0", "TOTAL,0,1,0,0,0"]
