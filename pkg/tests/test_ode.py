import math

import numpy as np
import pytest

from ddilab.errors import StiffnessError
from ddilab.ode import dopri45


def test_exponential_decay():
    sol = dopri45(lambda t, y: -y, 0.0, np.array([1.0]), 5.0, rtol=1e-10)
    assert sol.y[-1, 0] == pytest.approx(math.exp(-5.0), rel=1e-8)
    assert sol.t[-1] == 5.0


def test_harmonic_oscillator_energy():
    f = lambda t, y: np.array([y[1], -y[0]])
    sol = dopri45(f, 0.0, np.array([1.0, 0.0]), 20 * math.pi, rtol=1e-11)
    assert sol.y[-1, 0] == pytest.approx(1.0, abs=1e-8)
    assert np.max(np.abs(sol.y[:, 0] ** 2 + sol.y[:, 1] ** 2 - 1)) < 1e-8


def test_tolerance_controls_error():
    errs = []
    for rtol in (1e-6, 1e-9):
        sol = dopri45(lambda t, y: np.cos(t) * y, 0.0, np.array([1.0]), 10.0, rtol=rtol)
        errs.append(abs(sol.y[-1, 0] - math.exp(math.sin(10.0))))
    assert errs[1] < errs[0] / 100


def test_finite_time_blowup_is_reported():
    with pytest.raises(StiffnessError):
        dopri45(lambda t, y: y * y, 0.0, np.array([1.0]), 2.0, rtol=1e-8)
