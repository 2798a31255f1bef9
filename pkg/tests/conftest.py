import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    label = marker.args[0]
    if report.when == "call" or report.failed:
        status = "PASS" if report.passed else "FAIL"
        previous = _CRITERIA.get(label, ("PASS", ""))[0]
        _CRITERIA[label] = ("FAIL" if "FAIL" in (status, previous) else "PASS", marker.args[1])


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(label, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(_CRITERIA, key=lambda s: int(s[1:])):
        status, title = _CRITERIA[label]
        terminalreporter.write_line(f"{label:4s} {status}  {title}")
