import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coinflow.configspace import Configuration
from coinflow.limits import LimitLaw
from coinflow.stats import (empirical_pmf, gamma_moment_ratio, histogram, histogram_csv,
                            ks_distance, moments, tv_distance)
from coinflow.weights import WeightSpec


def test_direct_binning():
    h = histogram(Configuration([0, 1, 2, 3]), 1, 2)
    assert h.counts.tolist() == [2, 2]
    assert h.edges.tolist() == [0, 2, 4]


def test_constant_configuration_single_bin():
    h = histogram(Configuration([7] * 10), a_N=2, bin_width=0.5)
    assert np.count_nonzero(h.counts) == 1
    j = int(np.flatnonzero(h.counts)[0])
    assert h.edges[j] <= 3.5 < h.edges[j + 1]


def test_scaled_edge_values_go_up():
    # 0.3 / 0.1 is not exactly 3 in floating point
    h = histogram([3], a_N=10, bin_width=0.1)
    assert h.counts.tolist() == [0, 0, 0, 1]


@given(st.lists(st.integers(0, 1000), min_size=1, max_size=200),
       st.floats(0.5, 50), st.floats(0.01, 30))
def test_mass_and_mean(xi, a, w):
    h = histogram(xi, a, w)
    assert h.counts.sum() == len(xi)
    assert h.mean == pytest.approx(sum(xi) / (len(xi) * a))


def test_ks_point_mass_vs_exponential():
    T = 100.0
    law = LimitLaw(1.0, T)
    sample = [100] * 50
    # right limit at T: empirical CDF 1 vs 1 - 1/e
    assert abs(1 - law.cdf(T)) == pytest.approx(math.exp(-1))
    # supremum over the line is attained just below T
    assert ks_distance(sample, law) == pytest.approx(1 - math.exp(-1))


def test_ks_raw_sample_matches_scipy():
    rng = np.random.default_rng(0)
    law = LimitLaw(3.0, 10.0)
    x = rng.integers(0, 60, size=500)
    from scipy import stats
    assert ks_distance(x, law) == pytest.approx(stats.kstest(x, law.cdf).statistic, abs=1e-12)


def test_ks_fine_discretization_is_small():
    law = LimitLaw(3.0, 1.0)
    edges = np.linspace(0, 20, 2001)
    counts = np.round(np.diff(law.cdf(edges)) * 10**6).astype(int)
    from coinflow.stats import WealthHistogram
    h = WealthHistogram(0.01, counts, int(counts.sum()), 1.0, 0)
    assert ks_distance(h, law) < 1e-4


@given(st.lists(st.integers(0, 500), min_size=1, max_size=100))
def test_ks_bounds(xi):
    law = LimitLaw(2.0, 50.0)
    for d in (ks_distance(xi, law), ks_distance(histogram(xi, 1, 5), law)):
        assert 0 <= d <= 1


def test_tv_examples():
    p = [0.2, 0.3, 0.5]
    assert tv_distance(p, p) == 0
    assert tv_distance([1, 0], [0, 1]) == 1
    assert tv_distance([0.5, 0.5], [1, 0]) == 0.5
    with pytest.raises(ValueError):
        tv_distance([1], [0.5, 0.5])


def test_moments():
    m = moments(Configuration([6] * 5), a_N=2)
    assert m == [3, 9, 27, 81]
    big = moments([10**12, 0], a_N=1)
    assert big[3] == pytest.approx(0.5 * 10**48)


def test_gamma_moment_ratio():
    assert gamma_moment_ratio(3) == pytest.approx(4 / 3)
    rng = np.random.default_rng(1)
    x = rng.gamma(3, 10, size=10**6)
    assert np.mean(x**2) / np.mean(x) ** 2 == pytest.approx(4 / 3, rel=0.01)


def test_histogram_csv_columns():
    law = LimitLaw.for_weight(WeightSpec.power(1), 2.0)
    text = histogram_csv(histogram([0, 1, 2, 3], 1, 2), law, ["seed=7"])
    lines = text.splitlines()
    assert lines[0] == "# seed=7"
    assert lines[1] == "bin_left,bin_right,count,density,limit_density"
    row = lines[2].split(",")
    assert row[:3] == ["0", "2", "2"] and float(row[3]) == 0.25
    assert float(row[4]) == pytest.approx(law.cdf(2.0) / 2)


def test_empirical_pmf():
    assert empirical_pmf([0, 2, 2, 1], 3).tolist() == [0.25, 0.25, 0.5, 0]
