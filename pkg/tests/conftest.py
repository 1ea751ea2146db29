from fractions import Fraction

import pytest

from dyc.cube import parse_cube
from dyc.forest import CubeFamily


def C(text):
    """Shorthand cube literal, e.g. C("0:1/2") or C("0,1/2:1/4")."""
    return parse_cube(text)


def fam(*texts) -> CubeFamily:
    return CubeFamily([C(t) for t in texts])


def F(x) -> Fraction:
    return Fraction(x)


@pytest.fixture
def rng():
    import numpy as np

    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(line)
