import os

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from genpoly.boolean_fn import BooleanFunction
from genpoly.polymorphism import PolymorphismInstance

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@st.composite
def boolean_functions(draw, min_arity=0, max_arity=5):
    n = draw(st.integers(min_arity, max_arity))
    return BooleanFunction(n, draw(st.integers(0, (1 << (1 << n)) - 1)))


def functions_of(n):
    return st.integers(0, (1 << (1 << n)) - 1).map(lambda t: BooleanFunction(n, t))


@st.composite
def instances(draw, max_n=3, max_m=3):
    n = draw(st.integers(0, max_n))
    m = draw(st.integers(0, max_m))
    fs = tuple(draw(functions_of(n)) for _ in range(m))
    gs = tuple(draw(functions_of(m)) for _ in range(n))
    return PolymorphismInstance(n, m, draw(functions_of(n)), fs, draw(functions_of(m)), gs)


# one PASS/FAIL line per acceptance criterion in the terminal summary
_criteria = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion a test belongs to")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or not (rep.when == "call" or rep.failed or rep.skipped):
        return
    number, title = mark.args
    _, ok = _criteria.get(number, (title, True))
    _criteria[number] = (title, ok and rep.passed)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_criteria):
        title, ok = _criteria[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}")
