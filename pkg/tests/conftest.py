"""Collects acceptance outcomes and prints one PASS/FAIL line per criterion."""

import re

CRITERION = re.compile(r"test_acceptance\.py::test_c(\d+)_")
_outcomes: dict[int, dict] = {}


def pytest_runtest_logreport(report):
    m = CRITERION.search(report.nodeid)
    if not m:
        return
    entry = _outcomes.setdefault(int(m.group(1)), {"failed": False, "ran": False, "seconds": 0.0})
    entry["seconds"] += report.duration
    if report.when == "call":
        entry["ran"] = True
    if report.failed:
        entry["failed"] = True


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    from test_acceptance import CRITERIA

    terminalreporter.section("acceptance criteria")
    for num in sorted(CRITERIA):
        entry = _outcomes.get(num)
        if entry is None:
            status = "SKIP"
        elif entry["failed"] or not entry["ran"]:
            status = "FAIL"
        else:
            status = "PASS"
        took = f" ({entry['seconds']:.1f} s)" if entry else ""
        terminalreporter.write_line(f"{status} criterion {num:2d}: {CRITERIA[num]}{took}")
