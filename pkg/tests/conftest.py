from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from schedround import Instance


@st.composite
def standard_instances(draw, max_m=3, max_n=5, ineligible=True):
    """Small standard instances: per-pair sizes, per-job weights, small rationals."""
    m = draw(st.integers(1, max_m))
    n = draw(st.integers(1, max_n))
    val = st.fractions(min_value=Fraction(1, 4), max_value=8, max_denominator=4)
    p = [[draw(val) for _ in range(n)] for _ in range(m)]
    if ineligible and m > 1:
        for j in range(n):
            keep = draw(st.integers(0, m - 1))
            for i in range(m):
                if i != keep and draw(st.booleans()):
                    p[i][j] = None
    w = [draw(val) for _ in range(n)]
    return Instance.from_lists(p, w)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for name in sorted(RESULTS, key=lambda s: (len(s.split("-")[0]), s)):
            terminalreporter.write_line(RESULTS[name])
