import itertools
import math

import numpy as np
import pytest

from imc2.errors import EnumerationTooLarge
from imc2.independence import (
    enumerated_independence,
    greedy_independence,
    greedy_order,
    independence_along,
    independence_probability,
    order_providers,
)


def symmetric_oracle(dep, r):
    """Average over orderings via elementary symmetric polynomials.

    A provider placed at position p sees a uniformly random (p)-subset of the
    others as predecessors, so E[prod] = sum_p e_p(x) / C(k-1, p) / k with
    x the factors (1 - r * dep[i, j]) shifted by -1 ... written out directly
    here as the mean over subset sizes of the mean subset product.
    """
    k = dep.shape[0]
    out = np.empty(k)
    for i in range(k):
        others = [1 - r * dep[i, j] for j in range(k) if j != i]
        # e[s] = elementary symmetric polynomial of degree s
        e = [1.0] + [0.0] * len(others)
        for x in others:
            for s in range(len(others), 0, -1):
                e[s] += e[s - 1] * x
        out[i] = sum(e[s] / math.comb(k - 1, s) for s in range(k)) / k
    return out


def test_one_predecessor():
    assert independence_probability(2, [1], {(2, 1): 0.5}, 0.4) == pytest.approx(0.8)
    assert independence_probability(2, [], {}, 0.4) == 1.0


def test_greedy_starts_with_dominant_pair_then_appends_third():
    post = {(2, 1): 0.9, (1, 2): 0.05, (3, 1): 0.1, (3, 2): 0.2, (1, 3): 0.0, (2, 3): 0.0}
    res = order_providers([3, 1, 2], post, r=0.4)
    assert res.ordered == (1, 2, 3)
    assert res.independence[1] == 1.0
    assert res.independence[2] == pytest.approx(1 - 0.4 * 0.9)
    assert res.independence[3] == pytest.approx((1 - 0.04) * (1 - 0.08))


def test_tie_goes_to_smaller_id():
    res = order_providers([5, 4, 6], {}, r=0.4)
    assert res.ordered == (4, 5, 6)
    assert all(v == 1.0 for v in res.independence.values())


def test_min_first_pick_uses_least_dependent_pair():
    dep = np.array([[0, 0.9, 0.0], [0.1, 0, 0.05], [0.0, 0.05, 0]])
    assert greedy_order(dep, "max")[0] == 1
    assert greedy_order(dep, "min")[0] == 0


def test_independence_along_matches_hand_products():
    dep = np.array([[0, 0.5, 0.2], [0.1, 0, 0.3], [0.4, 0.6, 0]])
    ind = independence_along(dep, [2, 0, 1], 0.5)
    assert ind[2] == 1.0
    assert ind[0] == pytest.approx(1 - 0.5 * 0.2)
    assert ind[1] == pytest.approx((1 - 0.5 * 0.1) * (1 - 0.5 * 0.3))


def test_empty_provider_set_rejected():
    with pytest.raises(ValueError):
        order_providers([], {})


def test_enumeration_two_providers_is_average_of_both_orders():
    dep = np.array([[0, 0.7], [0.2, 0]])
    got = enumerated_independence(dep, 0.4)
    assert got == pytest.approx([(1 + (1 - 0.4 * 0.7)) / 2, (1 + (1 - 0.4 * 0.2)) / 2])


def test_enumeration_matches_symmetric_polynomial_oracle():
    rng = np.random.default_rng(5)
    for k in range(1, 7):
        for _ in range(5):
            dep = rng.uniform(0, 1, (k, k))
            np.fill_diagonal(dep, 0)
            r = float(rng.uniform(0, 1))
            assert enumerated_independence(dep, r) == pytest.approx(symmetric_oracle(dep, r), rel=1e-12)


def test_enumeration_guard():
    with pytest.raises(EnumerationTooLarge):
        enumerated_independence(np.zeros((13, 13)), 0.4)


def test_greedy_is_one_of_the_enumerated_orders():
    rng = np.random.default_rng(9)
    dep = rng.uniform(0, 1, (4, 4))
    np.fill_diagonal(dep, 0)
    order, ind = greedy_independence(dep, 0.4)
    assert sorted(order.tolist()) == [0, 1, 2, 3]
    all_orders = [tuple(independence_along(dep, p, 0.4)) for p in itertools.permutations(range(4))]
    assert any(np.allclose(ind, o) for o in all_orders)
