from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats as sps

from ggmeval.harness.stats import average_ranks, mean_stderr, spearman


@pytest.mark.parametrize(
    "xs,ys,expected",
    [((1, 2, 3), (10, 20, 30), 1.0), ((1, 2, 3), (3, 2, 1), -1.0), ((1, 2, 3), (2, 1, 3), 0.5)],
)
def test_examples(xs, ys, expected):
    assert spearman(xs, ys) == pytest.approx(expected)


def test_average_ranks():
    assert average_ranks([10, 20, 20, 5]).tolist() == [2.0, 3.5, 3.5, 1.0]


def test_closed_form_without_ties(rng):
    for _ in range(20):
        n = int(rng.integers(3, 30))
        xs, ys = rng.permutation(n), rng.permutation(n)
        d2 = float(np.sum((xs - ys) ** 2))
        assert spearman(xs, ys) == pytest.approx(1 - 6 * d2 / (n * (n * n - 1)), abs=1e-12)


def test_matches_scipy_with_ties(rng):
    for _ in range(20):
        xs, ys = rng.integers(0, 4, 15), rng.integers(0, 4, 15)
        if len(set(xs)) > 1 and len(set(ys)) > 1:
            assert spearman(xs, ys) == pytest.approx(sps.spearmanr(xs, ys).statistic, abs=1e-12)


def test_constant_gives_zero():
    assert spearman([0.3] * 11, np.linspace(0, 1, 11)) == 0.0


def test_errors():
    with pytest.raises(ValueError):
        spearman([1, 2], [1, 2, 3])
    with pytest.raises(ValueError):
        spearman([1], [1])


@given(st.lists(st.integers(-10**4, 10**4), min_size=2, max_size=20))
def test_monotone_transform_invariant(xs):
    ts = np.arange(len(xs))
    base = spearman(xs, ts)
    assert -1.0 <= base <= 1.0
    # strictly increasing and exact in floating point for this range
    assert spearman([2 * x**3 + 5 for x in xs], ts) == pytest.approx(base, abs=1e-12)
    assert spearman([-x for x in xs], ts) == pytest.approx(-base, abs=1e-12)


def test_mean_stderr():
    m, se = mean_stderr([1.0, 2.0, 3.0])
    assert m == 2.0 and se == pytest.approx(1 / np.sqrt(3))
    assert mean_stderr([4.0]) == (4.0, 0.0)
