"""Reports one pass/fail line per acceptance criterion after the run."""
import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers",
        "acceptance(num, label): criterion reported as a pass/fail summary line",
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    num, label = marker.args
    if report.when == "call":
        _RESULTS[num] = (label, report.passed)
    elif report.when == "setup" and report.failed:
        _RESULTS[num] = (label, False)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        label, passed = _RESULTS[num]
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[acceptance {num}] {label}: {status}")
