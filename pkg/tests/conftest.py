import pytest

from lnelab.semialgebraic import make_set


@pytest.fixture(scope="session")
def x3():
    return make_set(["t", "x", "z"], [[("z^2 - t^2*x^2", "=0"), ("x", ">=0"), ("t - x", ">=0")]])


@pytest.fixture(scope="session")
def halfline():
    return make_set(["x1", "x2"], [[("x2", "=0"), ("x1", ">=0")]])


@pytest.fixture(scope="session")
def two_halflines():
    return make_set(["x1", "x2"], [[("x2", "=0"), ("x1", ">=0")], [("x1", "=0"), ("x2", ">=0")]])


@pytest.fixture(scope="session")
def convex_cone():
    return make_set(["x1", "x2"], [[("x2 - x1", ">=0"), ("x2 + x1", ">=0")]])


@pytest.fixture(scope="session")
def circle_cone():
    return make_set(["x1", "x2", "x3"], [[("x3^2 - x1^2 - x2^2", "=0"), ("x3", ">=0")]])


@pytest.fixture(scope="session")
def tangent_parabolas():
    return make_set(["x1", "x2"], [[("x2 - x1^2", "=0")], [("x2 + x1^2", "=0"), ("x1", ">=0")]])


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[n])
