import itertools

import numpy as np
import pytest

from imc2 import auction as ra
from imc2.errors import InfeasibleCoverage, InsufficientCompetition, OracleTooLarge
from imc2.model import AccuracyMatrix, Instance, TaskSpec, WorkerBid

from conftest import random_market


def test_unit_cost_examples():
    w = WorkerBid(1, {"t"}, 3.0)
    assert ra.effective_unit_cost(w, {"t": 1.0}, {(1, "t"): 0.6}) == pytest.approx(5.0)
    w2 = WorkerBid(2, {"t"}, 2.0)
    assert ra.effective_unit_cost(w2, {"t": 0.5}, {(2, "t"): 0.5}) == pytest.approx(4.0)
    assert ra.effective_unit_cost(w2, {"t": 0.0}, {(2, "t"): 0.5}) == float("inf")


def test_hand_trace(three_worker_market):
    inst, acc = three_worker_market
    order, trace = ra.select_winners(inst, acc)
    assert order == (2, 1)
    assert trace[0][1] == {"t": 1.0} and trace[1][1] == {"t": 0.5}
    out = ra.run_reverse_auction(inst, acc)
    assert out.winners == (2, 1)
    assert out.payments == {1: 4.0, 2: 4.0, 3: 0.0}
    assert out.social_cost == 5.0 and out.total_payment == 8.0
    assert out.residual == {"t": 0.0}
    assert ra.compute_payments(inst, acc, (2, 1)) == out.payments
    assert ra.brute_force_opt(inst, acc) == (5.0, (1, 2))
    assert ra.run_ga(inst, acc) == (1, 2)
    assert ra.run_gb(inst, acc) == (2, 1)


def test_payment_rounds_by_hand(three_worker_market):
    """Winner 2: substitutes 1 (2.5) then 3 (4.0); winner 1: substitutes 2 (2.4) then 3 (4.0)."""
    inst, acc = three_worker_market
    # rerun without worker 2: worker 1 picked first (unit 5 < 8), then worker 3
    p2_round1 = 0.5 / 0.6 * 3.0
    p2_round2 = 0.4 / 0.4 * 4.0
    p1_round1 = 0.6 / 0.5 * 2.0
    p1_round2 = 0.5 / 0.5 * 4.0
    pay = ra.compute_payments(inst, acc, (2, 1))
    assert pay[2] == pytest.approx(max(p2_round1, p2_round2))
    assert pay[1] == pytest.approx(max(p1_round1, p1_round2))


def test_utility(three_worker_market):
    inst, acc = three_worker_market
    out = ra.run_reverse_auction(inst.with_bid(1, 3.0), acc)
    assert ra.worker_utility(1, out, inst) == pytest.approx(1.0)
    assert ra.worker_utility(3, out, inst) == 0.0


def test_bound_constants_examples(three_worker_market):
    inst = Instance([TaskSpec("t", 1.0)], [WorkerBid(1, {"t"}, 2.0)])
    b = ra.bound_constants(inst, {(1, "t"): 0.5})
    assert (b.delta_v, b.omega, b.bound_eps, b.h_omega, b.factor) == pytest.approx((0.5, 2.0, 1.0, 1.5, 3.0))
    inst3, acc3 = three_worker_market
    b3 = ra.bound_constants(inst3, acc3)
    assert (b3.delta_v, b3.omega, b3.bound_eps, b3.h_omega, b3.factor) == pytest.approx((0.5, 2.0, 2.0, 1.5, 6.0))


def test_harmonic():
    assert ra.harmonic(0) == 0.0
    assert ra.harmonic(1) == 1.0
    assert ra.harmonic(2.0) == pytest.approx(1.5)
    assert ra.harmonic(2.2) == pytest.approx(1 + 1 / 2 + 1 / 3)


def test_zero_requirement_means_no_winners():
    inst = Instance([TaskSpec("t", 0.0)], [WorkerBid(1, {"t"}, 2.0)])
    out = ra.run_reverse_auction(inst, {(1, "t"): 0.5})
    assert out.winners == () and out.social_cost == 0.0
    assert ra.run_gb(inst, {(1, "t"): 0.5}) == ()


def test_infeasible_and_no_competition():
    inst = Instance([TaskSpec("t", 1.0)], [WorkerBid(1, {"t"}, 2.0), WorkerBid(2, {"t"}, 3.0)])
    with pytest.raises(InfeasibleCoverage) as err:
        ra.run_reverse_auction(inst, {(1, "t"): 0.4, (2, "t"): 0.4})
    assert err.value.tasks == ["t"]
    for fn in (ra.run_ga, ra.run_gb, ra.brute_force_opt):
        with pytest.raises(InfeasibleCoverage):
            fn(inst, {(1, "t"): 0.4, (2, "t"): 0.4})
    with pytest.raises(InsufficientCompetition) as err:
        ra.run_reverse_auction(inst, {(1, "t"): 0.6, (2, "t"): 0.6})
    assert err.value.worker_id in (1, 2)


def test_single_worker_cover_for_greedy_baselines():
    inst = Instance([TaskSpec("t", 0.5)], [WorkerBid(1, {"t"}, 2.0)])
    assert ra.run_ga(inst, {(1, "t"): 0.5}) == (1,)


def test_opt_guard():
    inst = Instance([TaskSpec("t", 0.1)], [WorkerBid(i, {"t"}, 1.0) for i in range(21)])
    with pytest.raises(OracleTooLarge):
        ra.brute_force_opt(inst, {(i, "t"): 0.5 for i in range(21)})


def test_opt_matches_itertools_enumeration():
    rng = np.random.default_rng(2)
    for _ in range(30):
        inst, acc = random_market(rng, int(rng.integers(1, 8)), int(rng.integers(1, 4)))
        best = float("inf")
        for k in range(inst.n + 1):
            for combo in itertools.combinations(inst.workers, k):
                if all(sum(acc.get((w.worker_id, t.task_id), 0.0) for w in combo) >= t.theta - 1e-12 for t in inst.tasks):
                    best = min(best, sum(w.cost for w in combo))
        assert ra.brute_force_opt(inst, acc)[0] == pytest.approx(best)


def test_theta_override_and_json(three_worker_market):
    inst, acc = three_worker_market
    out = ra.run_reverse_auction(inst, acc, theta={"t": 0.5})
    assert out.winners == (2,)
    doc = out.to_json(ra.bound_constants(inst, acc))
    assert doc["winners"] == [2] and doc["bounds"]["factor"] == pytest.approx(6.0)


def test_random_outcomes_cover_and_are_rational():
    rng = np.random.default_rng(8)
    checked = 0
    for _ in range(200):
        inst, acc = random_market(rng, int(rng.integers(2, 9)), int(rng.integers(1, 5)))
        try:
            out = ra.run_reverse_auction(inst, acc)
        except InsufficientCompetition:
            continue
        checked += 1
        for t in inst.tasks:
            assert sum(acc.get((w, t.task_id), 0.0) for w in out.winners) >= t.theta - 1e-9
        for w in out.winners:
            assert out.payments[w] >= inst.worker(w).bid_price - 1e-9
    assert checked > 50


def test_platform_utility(three_worker_market):
    inst, acc = three_worker_market
    out = ra.run_reverse_auction(inst, acc)
    assert ra.platform_utility(out, 20.0) == pytest.approx(12.0)
