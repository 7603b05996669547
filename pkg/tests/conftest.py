import math

import numpy as np
import pytest

from ddilab.model import ModelParams
from ddilab.pattern import build_pattern, constant_pattern
from ddilab.potential import potential_spec

SQRT2 = math.sqrt(2.0)


@pytest.fixture(scope="session")
def p_star():
    return ModelParams()


@pytest.fixture(scope="session")
def spec(p_star):
    return potential_spec(p_star)


@pytest.fixture(scope="session")
def patterns(p_star):
    """Continuous patterns at gamma = 20 on the 1024-point grid, keyed by k."""
    return {k: build_pattern(p_star, k, "increasing", 1024) for k in (1, 2, 3)}


@pytest.fixture(scope="session")
def minus_pattern_g10():
    p = ModelParams(gamma=10.0)
    return p, constant_pattern(p, "minus")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Acceptance lines are collected here and echoed in the terminal summary.
ACCEPTANCE_LINES: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
