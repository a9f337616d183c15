import json
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

from etaops.qseries import CoefficientCache

DATA = Path(__file__).parent / "data"

settings.register_profile("default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def cache():
    return CoefficientCache()


@pytest.fixture(scope="session")
def identities():
    return json.loads((DATA / "identities.json").read_text())


@pytest.fixture(scope="session")
def tables():
    return json.loads((DATA / "tables.json").read_text())


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion n")
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when != "call" and not (rep.when == "setup" and rep.failed):
        return
    results = item.config._criteria
    results[mark.args[0]] = results.get(mark.args[0], True) and rep.passed


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config._criteria
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(f"CRITERION {n}: {'PASS' if results[n] else 'FAIL'}")
