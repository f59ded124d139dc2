"""Shared pytest wiring: the acceptance-criterion marker and its summary lines."""

import pytest

# (number, title) -> "PASS" / "FAIL"; a criterion with several tests fails if any does
_outcomes = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by this test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    key = (marker.args[0], marker.args[1])
    if report.failed:
        _outcomes[key] = "FAIL"
    elif report.when == "call":
        _outcomes.setdefault(key, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), status in sorted(_outcomes.items()):
        terminalreporter.write_line(f"criterion {number:>2} {status}: {title}")
