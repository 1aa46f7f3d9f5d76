import math

import numpy as np
import pytest
from scipy import stats

from coinflow import exact, limits
from coinflow.configspace import enumerate_omega
from coinflow.limits import LimitLaw, TiltedLaw
from coinflow.weights import WeightSpec, parse_weight

BUILTIN = ["constant:1", "power:0", "power:1", "power:3", "power:-1", "power:-2", "delta0",
           "table:1,2,3:zero", "table:1,2:const"]


def direct_sum(spec, s, n, terms=200000):
    k = np.arange(terms, dtype=float)
    return math.fsum(k**n * s**k * spec.G_array(terms - 1))


@pytest.mark.parametrize("text", BUILTIN)
@pytest.mark.parametrize("s", [0.1, 0.5, 0.9, 0.99])
def test_series_against_long_direct_sum(text, s):
    spec = parse_weight(text)
    for n in range(3):
        assert limits.q_series(spec, s, n) == pytest.approx(direct_sum(spec, s, n), rel=1e-10)


def test_series_closed_forms():
    assert limits.q_series(WeightSpec.power(1), 0.0) == 1.0
    # constant g: G(k) = k + 1, so Q0 = 1 / (1 - s)^2
    for s in (0.5, 0.9, 0.999):
        assert limits.q_series(WeightSpec.constant(1), s) == pytest.approx((1 - s) ** -2, rel=1e-10)
    assert limits.q_series(WeightSpec.delta0(), 0.75) == pytest.approx(4)


@pytest.mark.parametrize("s", [0.99, 0.999, 0.9999])
def test_constant_series_asymptote(s):
    assert limits.q_series(WeightSpec.constant(1), s) * (1 - s) ** 2 == pytest.approx(1, rel=1e-8)


@pytest.mark.parametrize("text", BUILTIN)
def test_mean_increasing_in_s(text):
    spec = parse_weight(text)
    grid = [0.1 * i for i in range(1, 10)] + [0.95, 0.99]
    means = [limits.tilted_mean(spec, s) for s in grid]
    assert all(b > a for a, b in zip(means, means[1:]))


@pytest.mark.parametrize("text", ["constant:1", "power:1", "power:-1.5", "delta0"])
@pytest.mark.parametrize("K", [0.5, 3, 100, 5000])
def test_s_star_hits_target_mean(text, K):
    spec = parse_weight(text)
    s = limits.solve_s_star(spec, K)
    assert 0 < s < 1
    assert limits.tilted_mean(spec, s) == pytest.approx(K, rel=1e-9)


def test_s_star_constant_closed_form():
    # constant g: mean of s^k (k+1) (1-s)^2 is 2s/(1-s), so s* = K / (K + 2)
    for K in (1, 10, 1e3):
        assert limits.solve_s_star(WeightSpec.constant(1), K) == pytest.approx(K / (K + 2), rel=1e-10)


@pytest.mark.parametrize("text,c", [("constant:1", 2), ("power:1", 3), ("power:3", 5), ("delta0", 1)])
def test_asymptotics_at_1e4(text, c):
    spec = parse_weight(text)
    K = 1e4
    s = limits.solve_s_star(spec, K)
    assert abs((1 - s) * K - c) <= 0.05 * c
    assert limits.tilted_variance(spec, s, K) / K**2 == pytest.approx(1 / c, rel=0.1)


def test_variance_against_pmf():
    spec = WeightSpec.power(1)
    s = limits.solve_s_star(spec, 50)
    law = TiltedLaw(spec, s)
    k = np.arange(law.truncation_K + 1)
    var = np.dot(k**2, law.pmf) - np.dot(k, law.pmf) ** 2
    assert limits.tilted_variance(spec, s) == pytest.approx(var, rel=1e-9)


@pytest.mark.parametrize("text", BUILTIN)
def test_tilted_law_normalized(text):
    law = TiltedLaw(parse_weight(text), 0.97)
    assert law.pmf.sum() == pytest.approx(1, abs=1e-12)


def test_limit_law_forms():
    law = LimitLaw.for_weight(WeightSpec.power(0), 2.5)
    assert law.shape == 2 and law.mean == pytest.approx(2.5)
    for r in (0.1, 1.0, 4.0):
        T = 2.5
        assert limits.limit_density(law, r) == pytest.approx(4 * r / T**2 * math.exp(-2 * r / T))
    expo = LimitLaw.for_weight(WeightSpec.power(-2), 3.0)
    assert expo.kind == "exponential"
    assert expo.cdf(3.0) == pytest.approx(1 - math.exp(-1))
    assert LimitLaw.for_weight(WeightSpec.power(1), 100).dist.std() == pytest.approx(100 / math.sqrt(3))
    with pytest.raises(ValueError):
        limits.limit_density(law, -1)


def test_convolution_power_one_is_tilted_law():
    spec = WeightSpec.power(1)
    conv = limits.conv_power_pmf(spec, 0.8, 1, 60)
    assert np.allclose(conv.pmf, TiltedLaw(spec, 0.8).pmf_upto(60), rtol=1e-12, atol=0)


def test_convolution_against_direct_loop():
    spec = WeightSpec.table([1, 2, 1], tail="zero")
    s = 0.6
    p = TiltedLaw(spec, s).pmf_upto(40)
    direct = np.array([1.0])
    for _ in range(7):
        direct = np.convolve(direct, p)[:41]
    conv = limits.conv_power_pmf(spec, s, 7, 40)
    assert np.allclose(conv.pmf, direct, atol=1e-15)
    assert conv.lost_mass == pytest.approx(max(0.0, 1 - direct.sum()), abs=1e-12)


def test_conditioned_product_is_stationary_law():
    spec = WeightSpec.power(1)
    states = list(enumerate_omega(3, 6))
    mu = exact.stationary_vector_product(spec, states)
    a = limits.conditioned_product_law(spec, 0.3, 3, 6)
    b = limits.conditioned_product_law(spec, 0.6, 3, 6)
    assert np.abs(a - mu).max() <= 1e-10 and np.abs(a - b).max() <= 1e-10


def test_llt_errors():
    spec = WeightSpec.constant(1)
    e50 = limits.llt_error(spec, 50, 20)
    e200 = limits.llt_error(spec, 200, 20)
    assert e200.error < e50.error and e200.error < 0.05
    assert e200.lost_mass < 1e-10
    d25 = limits.llt_error(WeightSpec.delta0(), 25, 10).error
    d100 = limits.llt_error(WeightSpec.delta0(), 100, 10).error
    assert np.isfinite(d100) and d100 < d25


def test_llt_matches_scipy_normal_shape():
    # for the geometric law (delta0) the sum of N draws is negative binomial
    spec = WeightSpec.delta0()
    s = limits.solve_s_star(spec, 10)
    conv = limits.conv_power_pmf(spec, s, 30, 900)
    ref = stats.nbinom(30, 1 - s).pmf(np.arange(901))
    assert np.allclose(conv.pmf, ref, rtol=1e-9, atol=1e-300)


@pytest.mark.parametrize("spec", [WeightSpec.constant(1), WeightSpec.delta0()])
def test_ensemble_convergence(spec):
    small = limits.ensemble_marginal_vs_limit(spec, 8, 16, 1.0)
    large = limits.ensemble_marginal_vs_limit(spec, 32, 64, 1.0)
    assert large.L == 2048 and small.L == 128
    assert large.tv <= 0.1 and large.tv < small.tv


def test_ensemble_uses_exact_marginal():
    spec = WeightSpec.constant(1)
    rep = limits.ensemble_marginal_vs_limit(spec, 4, 2, 1.0)
    law = LimitLaw.for_weight(spec, 1.0)
    p = np.array([exact.lr_marginal_constant_g(4, 8, c) for c in range(9)])
    q = limits.binned_limit_masses(law, 2, 9)
    tail = 1 - law.cdf(9 / 2)
    assert rep.tv == pytest.approx(0.5 * (np.abs(p - q).sum() + tail), rel=1e-10)
