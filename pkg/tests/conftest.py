import pytest

from gwmd import PRESETS, RngStream


@pytest.fixture
def rng():
    return RngStream(20241015, 0)


@pytest.fixture(params=sorted(PRESETS))
def preset(request):
    return PRESETS[request.param]


_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    marker = _criterion_of.get(report.nodeid)
    if marker is not None:
        _criteria[marker] = report.outcome


_criterion_of = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _criterion_of[item.nodeid] = mark.args


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for (number, title), outcome in sorted(_criteria.items()):
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"[{status}] criterion {number}: {title}")
