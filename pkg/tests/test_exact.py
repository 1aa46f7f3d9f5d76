import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coinflow import exact
from coinflow.configspace import enumerate_omega
from coinflow.dynamics import ModelKind
from coinflow.errors import BudgetError
from coinflow.groups import GroupDistribution
from coinflow.weights import WeightSpec


def brute_Z(spec, N, L):
    return math.fsum(math.prod(spec.G(k) for k in xi) for xi in enumerate_omega(N, L))


def test_small_partition_values():
    spec = WeightSpec.constant(1)
    table = exact.partition_table(spec, 2, 2)
    assert math.exp(table.log_Z(2, 2)) == pytest.approx(10)
    assert exact.stationary_prob(table, (1, 1)) == pytest.approx(0.4)
    assert exact.marginal(table, 2, 2, 0) == pytest.approx(0.3)


@pytest.mark.parametrize("text", ["constant:1", "power:1", "power:-1.5", "table:2,1,0,3:zero"])
def test_partition_function_by_enumeration(text):
    from coinflow.weights import parse_weight
    spec = parse_weight(text)
    table = exact.partition_table(spec, 4, 9)
    for N in range(1, 5):
        for L in range(10):
            assert math.exp(table.log_Z(N, L)) == pytest.approx(brute_Z(spec, N, L), rel=1e-12)


def test_partition_function_large_no_overflow():
    spec = WeightSpec.power(3)
    table = exact.partition_table(spec, 50, 3000)
    assert np.isfinite(table.log_Z(50, 3000))
    pmf = exact.marginal_pmf(table, 50, 3000)
    assert pmf.sum() == pytest.approx(1, abs=1e-10)


def test_partition_budget():
    with pytest.raises(BudgetError):
        exact.partition_table(WeightSpec.constant(1), 10**4, 10**6)


def test_delta0_uniform():
    table = exact.partition_table(WeightSpec.delta0(), 3, 5)
    for xi in enumerate_omega(3, 5):
        assert exact.stationary_prob(table, xi) == pytest.approx(1 / 21)
    assert exact.delta0_partition(3, 5) == 21


def test_lr_formula_examples():
    assert exact.lr_marginal_constant_g(2, 2, 0) == pytest.approx(0.3)
    assert exact.lr_marginal_constant_g(2, 2, 2) == pytest.approx(0.3)


def lr_exact(N, L, c):
    # the closed form in rational arithmetic
    return Fraction((c + 1) * math.comb(L - c + 2 * N - 3, 2 * N - 3),
                    math.comb(L + 2 * N - 1, 2 * N - 1))


@pytest.mark.parametrize("N", [2, 3, 4, 7])
def test_lr_formula_matches_rational(N):
    for L in (0, 1, 5, 30, 200):
        for c in range(L + 1):
            assert exact.lr_marginal_constant_g(N, L, c) == pytest.approx(float(lr_exact(N, L, c)), rel=1e-12)


def test_marginal_consistency_by_enumeration():
    for spec in (WeightSpec.constant(1), WeightSpec.power(1), WeightSpec.power(-2)):
        table = exact.partition_table(spec, 4, 12)
        for N in (2, 3, 4):
            for L in (0, 3, 12):
                probs = {xi: exact.stationary_prob(table, xi) for xi in enumerate_omega(N, L)}
                for k in range(L + 1):
                    direct = math.fsum(p for xi, p in probs.items() if xi[0] == k)
                    assert abs(exact.marginal(table, N, L, k) - direct) <= 1e-10


MODELS = [ModelKind.IMMEDIATE, ModelKind.SAVING]
GROUPS = {"pair": GroupDistribution.pair_complete(3), "path": GroupDistribution.path(3),
          "triple": GroupDistribution.ksubsets(3, 3),
          "mixed": GroupDistribution.custom(3, [(0, 1), (0, 1, 2)], [1, 2])}


@pytest.mark.parametrize("model", MODELS)
@pytest.mark.parametrize("gname", sorted(GROUPS))
@pytest.mark.parametrize("weight", ["constant:1", "power:1", "power:-1", "table:1,2,0,5,1:zero"])
def test_reversible_stationary(model, gname, weight):
    from coinflow.weights import parse_weight
    spec = parse_weight(weight)
    K = exact.build_kernel(model, spec, GROUPS[gname], 3, 5)
    mu = exact.stationary_probs(model, spec, K.states)
    assert exact.row_sum_error(K) <= 1e-12
    assert exact.check_detailed_balance(K, mu) <= 1e-10
    assert exact.stationarity_residual(K, mu) <= 1e-10


def test_named_examples():
    spec = WeightSpec.constant(1)
    K = exact.build_kernel(ModelKind.IMMEDIATE, spec, GroupDistribution.pair_complete(3), 3, 4)
    assert exact.check_detailed_balance(K, exact.stationary_probs(ModelKind.IMMEDIATE, spec, K.states)) <= 1e-10
    spec = WeightSpec.power(1)
    K = exact.build_kernel(ModelKind.SAVING, spec, GroupDistribution.pair_complete(3), 3, 4)
    assert exact.check_detailed_balance(K, exact.stationary_probs(ModelKind.SAVING, spec, K.states)) <= 1e-10
    K = exact.build_kernel(ModelKind.RESHUFFLE, None, GroupDistribution.pair_complete(2), 2, 3)
    mu = np.full(4, 0.25)
    assert np.abs(K.P - K.P.T).max() <= 1e-15
    assert exact.check_detailed_balance(K, mu) <= 1e-10


def test_offer_variant_agrees_for_constant_weight():
    rho = GroupDistribution.pair_complete(3)
    spec = WeightSpec.constant(1)
    a = exact.build_kernel(ModelKind.SAVING, spec, rho, 3, 5).P
    b = exact.build_kernel(ModelKind.SAVING_OFFER, spec, rho, 3, 5).P
    assert np.abs(a - b).max() <= 1e-14


def test_offer_variant_not_product_form_for_power_weight():
    # two agents, g(k) = k + 1: flow (2,0) -> (1,1) is 2, reverse flow is 7/3
    spec = WeightSpec.power(1)
    rho = GroupDistribution.pair_complete(2)
    K = exact.build_kernel(ModelKind.SAVING_OFFER, spec, rho, 2, 2)
    G = [1, 3, 6]
    w = {xi: G[xi[0]] * G[xi[1]] for xi in K.states}
    fwd = w[(2, 0)] * K.P[K.index((2, 0)), K.index((1, 1))]
    back = w[(1, 1)] * K.P[K.index((1, 1)), K.index((2, 0))]
    assert fwd == pytest.approx(2) and back == pytest.approx(7 / 3)


def test_rho_independence():
    spec = WeightSpec.power(2)
    for model in MODELS:
        vs = []
        for rho in (GroupDistribution.pair_complete(4), GroupDistribution.path(4)):
            K = exact.build_kernel(model, spec, rho, 4, 4)
            vs.append(exact.stationary_vector(K))
        mu = exact.stationary_probs(model, spec, K.states)
        assert np.abs(vs[0] - mu).max() <= 1e-10 and np.abs(vs[1] - mu).max() <= 1e-10


def test_models_share_stationary_vector():
    spec = WeightSpec.table([1, 2, 1, 4])
    rho = GroupDistribution.path(3)
    v = [exact.stationary_vector(exact.build_kernel(m, spec, rho, 3, 6)) for m in MODELS]
    assert np.abs(v[0] - v[1]).max() <= 1e-10


def test_kernel_caps():
    with pytest.raises(BudgetError):
        exact.build_kernel(ModelKind.SAVING, WeightSpec.constant(1),
                           GroupDistribution.pair_complete(10), 10, 10)
    with pytest.raises(BudgetError):
        exact.build_kernel(ModelKind.SAVING, WeightSpec.constant(1),
                           GroupDistribution.ksubsets(5, 5), 5, 2)


# -- symmetry sums --------------------------------------------------------


def brute_pair(a, b, g):
    return sum(g[t1] * g[t2] for t1 in range(a[0] + 1) for t2 in range(a[1] + 1)
               if t1 - t2 == a[0] - b[0] and t2 - t1 == a[1] - b[1])


def test_pair_examples():
    assert exact.symmetry_pair((1, 1), (2, 0), [1, 0, 0]) == 0
    g = [3, 1, 4, 1]
    assert exact.symmetry_pair((2, 3), (2, 3), g) == sum(v * v for v in g[:3])


def test_zero_cycle():
    g = [3, 1]
    for n in (3, 4, 5):
        assert exact.symmetry_cycle((0,) * n, (0,) * n, g) == 2 * 3**n


vec_pairs = st.integers(2, 4).flatmap(
    lambda n: st.integers(0, 5).flatmap(
        lambda total: st.tuples(st.sampled_from(list(enumerate_omega(n, total))),
                                st.sampled_from(list(enumerate_omega(n, total))))))
tables = st.lists(st.integers(0, 9), min_size=6, max_size=6).map(lambda t: [max(t[0], 1)] + t[1:])


@settings(max_examples=300, deadline=None)
@given(vec_pairs, tables)
def test_symmetry_against_brute_force(ab, g):
    a, b = ab
    if len(a) == 2:
        assert exact.symmetry_pair(a, b, g) == brute_pair(a, b, g)
        assert exact.symmetry_pair(a, b, g) == exact.symmetry_pair(b, a, g)
    else:
        assert exact.s_plus(a, b, g) == exact.brute_force_cycle(a, b, g, +1)
        assert exact.s_minus(a, b, g) == exact.brute_force_cycle(a, b, g, -1)
        assert exact.s_minus(a, b, g) == exact.s_plus(b, a, g)
        assert exact.symmetry_cycle(a, b, g) == exact.symmetry_cycle(b, a, g)


def test_symmetry_exact_integers():
    spec = WeightSpec.power(1)
    v = exact.symmetry_cycle((3, 0, 2), (1, 2, 2), spec)
    assert isinstance(v, int)


def test_symmetry_rejects_mismatched_sums():
    with pytest.raises(ValueError):
        exact.symmetry_pair((1, 1), (1, 0), [1])
    with pytest.raises(ValueError):
        exact.symmetry_cycle((1, 1), (1, 1), [1])
