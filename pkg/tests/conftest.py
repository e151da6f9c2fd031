import numpy as np
import pytest

from feketelab.parser import parse_map
from feketelab.potential import GreenEvaluator

MAPS = ["z^2", "z^2-1", "z^2+i", "(z^2+1)/(2*z)"]


@pytest.fixture(scope="session")
def green():
    cache = {}

    def get(expr):
        if expr not in cache:
            cache[expr] = GreenEvaluator(parse_map(expr))
        return cache[expr]
    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE: list[tuple[int, bool, str]] = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n, ok, detail in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
