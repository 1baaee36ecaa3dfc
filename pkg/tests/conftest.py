import functools

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

_ACCEPTANCE = {}


def pytest_runtest_logreport(report):
    if "test_acceptance.py::test_criterion_" not in report.nodeid:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _ACCEPTANCE[report.nodeid] = report.outcome


def pytest_collection_modifyitems(items):
    for item in items:
        if "test_acceptance.py::test_criterion_" in item.nodeid:
            doc = (item.function.__doc__ or "").strip().splitlines()
            item.user_properties.append(("title", doc[0] if doc else item.name))
            _TITLES[item.nodeid] = doc[0] if doc else item.name


_TITLES = {}


def pytest_terminal_summary(terminalreporter):
    if not _TITLES:
        return
    terminalreporter.section("acceptance criteria")
    for nodeid in sorted(_TITLES):
        outcome = _ACCEPTANCE.get(nodeid, "not run")
        mark = {"passed": "PASS", "failed": "FAIL"}.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{mark}  {_TITLES[nodeid]}")


@functools.lru_cache(maxsize=None)
def cached_scenario(name):
    from mineps.scenarios import run_scenario
    return run_scenario(name)


@pytest.fixture
def scenario():
    return cached_scenario
