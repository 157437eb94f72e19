import os
import sys

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from censdr.survdata import SurvivalDataset  # noqa: E402

ACCEPTANCE = []


def record(name, passed, detail):
    """Log one acceptance verdict; the terminal summary prints them all."""
    line = f"{name}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


def make_data(n=40, p=3, seed=0, censor=0.3, ties=False):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, p))
    t = np.exp(0.5 * x[:, 0] - 0.3 * x[:, 1] + 0.5 * rng.standard_normal(n))
    if ties:
        t = np.round(t, 1) + 0.1
    e = (rng.uniform(size=n) > censor).astype(float)
    return SurvivalDataset(x, t, e)


@pytest.fixture
def small_data():
    return make_data()
