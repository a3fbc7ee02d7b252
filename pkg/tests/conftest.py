import functools

import pytest
from hypothesis import settings

from lowspeed.orchestrator import build_A
from lowspeed.scenario import bundled

# numba compiles on first call, which can exceed per-example deadlines
settings.register_profile("lowspeed", deadline=None)
settings.load_profile("lowspeed")


@functools.lru_cache(maxsize=None)
def built(name):
    """``(state, family)`` for a bundled scenario, built once per session."""
    return build_A(bundled(name))


@pytest.fixture(scope="session")
def s1():
    return built("S1")


@pytest.fixture(scope="session")
def s2():
    return built("S2")


@pytest.fixture(scope="session")
def s3():
    return built("S3")


# one line per acceptance criterion, printed after the run
CRITERIA: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
