import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from mnar import Covariates, PanelSeries, SimConfig, normalize_networks, simulate  # noqa: E402
from oracles import random_networks  # noqa: E402

# acceptance verdicts, printed in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def small_instance(rng, n1=3, n2=3, T=4, observed=0.7, p_lo=0.4):
    """Random responses, mask, probabilities and networks for oracle checks."""
    y = rng.standard_normal((T, n1, n2))
    probs = rng.uniform(p_lo, 1.0, n1)
    mask = (rng.random((T, n1, n2)) < observed).astype(np.int8)
    a1, a2 = random_networks(n1, n2, rng)
    return y, mask, probs, normalize_networks(a1, a2)


@pytest.fixture
def tiny_sim():
    return simulate(SimConfig(n1=20, n2=15, horizon=12, b_rank=3, seed=7))


def make_panel(y, mask):
    return PanelSeries(y, mask)


def make_cov(rng, n1, p=3):
    x = np.column_stack([np.ones(n1), rng.standard_normal((n1, p - 1))])
    return Covariates(x)
