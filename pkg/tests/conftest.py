"""Per-criterion PASS/FAIL reporting for the acceptance suite.

Tests tagged ``@pytest.mark.criterion(k, "title")`` are grouped by ``k``; a
criterion passes only if all its tests pass. Tests may attach a measured value
with ``record_property("measured", ...)``.
"""

from __future__ import annotations

import pytest

_RESULTS: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and not rep.failed):
        return
    number, title = mark.args
    entry = _RESULTS.setdefault(number, {"title": title, "ok": True, "measured": []})
    entry["ok"] &= not rep.failed
    entry["measured"] += [f"{v}" for k, v in item.user_properties if k == "measured"]


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        e = _RESULTS[number]
        status = "PASS" if e["ok"] else "FAIL"
        detail = "; ".join(e["measured"])
        terminalreporter.write_line(f"criterion {number:2d} {status}  {e['title']}  [{detail}]")
