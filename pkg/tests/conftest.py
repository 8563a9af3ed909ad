import pytest

from mbsv.models import fig1_binary, gas_turbine


@pytest.fixture(scope="session")
def fig1():
    return fig1_binary()


@pytest.fixture(scope="session")
def turbine():
    return gas_turbine()


ACCEPTANCE_RESULTS: dict[str, tuple[str, str]] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    crit = item.get_closest_marker("criterion")
    if crit is None or rep.when != "call":
        return
    ACCEPTANCE_RESULTS[crit.args[0]] = ("PASS" if rep.passed else "FAIL", crit.args[1])


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(id, title): acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k[2:])):
        status, title = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{status}  {key}  {title}")
