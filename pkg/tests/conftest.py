import pytest

from slp_lab.config import load_params
from slp_lab.scenarios import load_scenario, run_sweep, run_timeline

# lines collected by test_acceptance.py, printed once at the end of the session
CRITERIA_LINES: dict[int, str] = {}


@pytest.fixture(scope="session")
def paper_params():
    return load_params()


@pytest.fixture(scope="session")
def scenario_results(paper_params):
    cache = {}

    def get(name):
        if name not in cache:
            tl = load_scenario(name)
            if tl.sweep is not None:
                cache[name] = run_sweep(paper_params, tl, name=name)
            else:
                cache[name] = run_timeline(paper_params, tl, name=name)
        return cache[name]

    return get


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA_LINES):
        terminalreporter.write_line(CRITERIA_LINES[n])
