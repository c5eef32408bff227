import json
from datetime import datetime, timezone
from pathlib import Path

import pytest

from adsurveil.extract import Lexicon
from adsurveil.model import AdRecord, Subcategory

DATA = Path(__file__).parent / "data"

_acceptance: dict[str, tuple[str, str]] = {}


@pytest.fixture(scope="session")
def lexicon():
    return Lexicon.load()


@pytest.fixture
def make_ad():
    counter = iter(range(10**9))

    def make(body="", title="Room for rent", **kw):
        fields = dict(
            id=f"t{next(counter)}",
            title=title,
            state="CO",
            city="Denver",
            subcategory=Subcategory.ROOMS_SHARES,
            posted_at=datetime(2016, 5, 1, tzinfo=timezone.utc),
            body=body,
        )
        fields.update(kw)
        return AdRecord(**fields)

    return make


def load_jsonl(name):
    with open(DATA / name, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    crit = dict(report.user_properties).get("acceptance")
    if crit is None:
        return
    status = "PASS" if report.passed else "FAIL"
    prev = _acceptance.get(crit)
    if prev is None or prev[0] == "PASS":
        _acceptance[crit] = (status, report.nodeid.split("::")[-1])


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    mark = item.get_closest_marker("acceptance")
    if mark is not None:
        item.user_properties.append(("acceptance", str(mark.args[0])))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance:
        return
    terminalreporter.section("acceptance criteria")
    for crit in sorted(_acceptance, key=lambda c: int(c)):
        status, name = _acceptance[crit]
        terminalreporter.write_line(f"[{status}] criterion {crit}: {name}")
