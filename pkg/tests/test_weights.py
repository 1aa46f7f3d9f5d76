import math
import pickle
import threading

import numpy as np
import pytest
from hypothesis import given, strategies as st

from coinflow.errors import ConfigError
from coinflow.weights import (WeightSpec, G_cumsum, asymptotic_G, format_weight, g_eval,
                              parse_weight)


def test_g_values():
    assert g_eval(WeightSpec.constant(1), 7) == 1
    assert g_eval(WeightSpec.power(1), 2) == 3
    d = WeightSpec.delta0()
    assert g_eval(d, 0) == 1 and g_eval(d, 3) == 0


def test_G_values():
    assert G_cumsum(WeightSpec.constant(1), 2) == 3
    assert G_cumsum(WeightSpec.power(1), 2) == 6
    assert all(G_cumsum(WeightSpec.delta0(), k) == 1 for k in (0, 1, 50, 10**4))


def test_asymptotic_G_large_k():
    assert G_cumsum(WeightSpec.power(0), 1000) == 1001
    assert asymptotic_G(WeightSpec.power(0), 1000) == pytest.approx(1000)
    assert G_cumsum(WeightSpec.power(1), 1000) == 501501
    assert asymptotic_G(WeightSpec.power(1), 1000) == pytest.approx(5.0e5)
    assert asymptotic_G(WeightSpec.delta0(), 10) == 1


@pytest.mark.parametrize("alpha", [-0.5, 0, 0.5, 1, 2, 3])
def test_asymptotic_ratio_at_1e5(alpha):
    spec = WeightSpec.power(alpha)
    assert abs(G_cumsum(spec, 10**5) / asymptotic_G(spec, 10**5) - 1) < 0.01


def test_G_large_k_matches_direct_sum():
    spec = WeightSpec.power(0.5)
    k = np.arange(20001)
    assert spec.G(20000) == pytest.approx(math.fsum((k + 1.0) ** 0.5), rel=1e-12)


@given(st.sampled_from(["constant:2.5", "power:1", "power:-1.5", "delta0",
                        "table:1,0,3,2:zero", "table:2,1:const"]),
       st.integers(min_value=1, max_value=3000))
def test_prefix_difference_is_g(text, k):
    spec = parse_weight(text)
    assert spec.G(k) - spec.G(k - 1) == pytest.approx(spec.g(k), abs=1e-9 * spec.G(k))
    assert spec.G(k) >= spec.G(k - 1) > 0


def test_table_tails():
    z = WeightSpec.table([1, 2, 3])
    c = WeightSpec.table([1, 2, 3], tail="const")
    assert [z.g(k) for k in range(5)] == [1, 2, 3, 0, 0]
    assert [c.g(k) for k in range(5)] == [1, 2, 3, 3, 3]
    assert z.regularity.summable
    assert c.regularity.alpha == 0 and c.regularity.c == 3


@pytest.mark.parametrize("text", ["table:0,1", "constant:0", "power:nan", "table:1,-1",
                                  "table:1:sideways", "gauss:1", "power:"])
def test_invalid_weights(text):
    with pytest.raises(ConfigError):
        parse_weight(text)


@pytest.mark.parametrize("text", ["constant:1", "power:1", "power:-2", "delta0",
                                  "table:1,2,3:zero", "table:1,2:const"])
def test_parse_format_roundtrip(text):
    spec = parse_weight(text)
    again = parse_weight(format_weight(spec))
    assert [again.g(k) for k in range(10)] == [spec.g(k) for k in range(10)]


def test_pickle_keeps_values():
    spec = WeightSpec.power(1)
    spec.G(5000)
    clone = pickle.loads(pickle.dumps(spec))
    assert clone.G(5000) == spec.G(5000)


def test_cache_under_concurrent_growth():
    spec = WeightSpec.power(0.7)
    ks = list(range(0, 200000, 997))
    expected = {}

    def work(offset):
        for k in ks[offset::4]:
            expected[k] = spec.G(k)

    threads = [threading.Thread(target=work, args=(i,)) for i in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    fresh = WeightSpec.power(0.7)
    assert all(expected[k] == fresh.G(k) for k in ks)
