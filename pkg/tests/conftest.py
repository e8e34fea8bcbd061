import numpy as np
import pytest

from bmspectra.body import BodySpec, make_body
from bmspectra.sphere import build_grid


@pytest.fixture(scope="session")
def circle():
    return build_grid(2, 256)


@pytest.fixture(scope="session")
def sphere20():
    return build_grid(3, 20)


@pytest.fixture(scope="session")
def ball2():
    return make_body(BodySpec.ball(2))


@pytest.fixture(scope="session")
def ellipse():
    return make_body(BodySpec.ellipsoid([2.0, 1.0]))


@pytest.fixture(scope="session")
def lq3_reg():
    return make_body(BodySpec.lq(3, 2, eps=0.25))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE = []


def record(criterion, passed, detail):
    """Keep one line per acceptance criterion for the terminal summary."""
    line = f"criterion {criterion:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE.append((criterion, line))
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(ACCEPTANCE):
        terminalreporter.write_line(line)
