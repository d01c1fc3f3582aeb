"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""

import re

_RESULTS = {}
_NAME = re.compile(r"test_acceptance\.py::test_c(\d+)_(\w+)")


def pytest_runtest_logreport(report):
    m = _NAME.search(report.nodeid)
    if not m:
        return
    key = (int(m.group(1)), m.group(2).replace("_", " "))
    if report.when == "call" or report.failed or report.skipped:
        if report.failed:
            _RESULTS[key] = "FAIL"
        elif report.skipped:
            _RESULTS.setdefault(key, "SKIP")
        else:
            _RESULTS.setdefault(key, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for (n, name), status in sorted(_RESULTS.items()):
        terminalreporter.write_line(f"criterion {n:2d} {status}  {name}")
