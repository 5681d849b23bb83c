import re

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    match = re.search(r"test_acceptance\.py::test_criterion_(\d+)_", report.nodeid)
    if not match:
        return
    key = int(match.group(1))
    if report.when == "call" or report.failed:
        _ACCEPTANCE[key] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"criterion {key:2d}: {_ACCEPTANCE[key]}")
