import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from imc2.dependence import (
    SharedTaskPartition,
    all_posteriors,
    clamp_accuracy,
    dependence_posterior,
    likelihood_dependent,
    likelihood_independent,
    partition_shared_tasks,
    prob_different,
    prob_same_false,
    prob_same_true,
)
from imc2.errors import DomainError
from imc2.harness import table1_instance
from imc2.model import AccuracyMatrix, ObservationIndex, Params, TaskSpec

from conftest import build


def direct_posterior(pairs, acc_i, acc_j, num, r, alpha):
    """Plain-probability evaluation of the three hypotheses for one worker pair.

    ``pairs`` lists, per shared task, one of "s", "f", "d".  Returns
    (P(i copies j), P(j copies i), P(independent)).
    """
    lik_ind = lik_ij = lik_ji = 1.0
    for kind, a, b in zip(pairs, acc_i, acc_j):
        ps = a * b
        pf = (1 - a) * (1 - b) / num
        pd = 1 - ps - pf
        if kind == "s":
            lik_ind *= ps
            lik_ij *= b * r + ps * (1 - r)
            lik_ji *= a * r + ps * (1 - r)
        elif kind == "f":
            lik_ind *= pf
            lik_ij *= (1 - b) * r + pf * (1 - r)
            lik_ji *= (1 - a) * r + pf * (1 - r)
        else:
            lik_ind *= pd
            lik_ij *= pd * (1 - r)
            lik_ji *= pd * (1 - r)
    w = [alpha / 2 * lik_ij, alpha / 2 * lik_ji, (1 - alpha) * lik_ind]
    z = sum(w)
    return tuple(x / z for x in w)


def test_hand_values():
    assert prob_same_true(0.8, 0.9) == pytest.approx(0.72, abs=1e-12)
    assert prob_same_false(0.8, 0.8, 2) == pytest.approx(0.02, abs=1e-12)
    assert prob_different(0.72, 0.005) == pytest.approx(0.275, abs=1e-12)


def test_same_false_uses_histogram_collision_mass():
    task = TaskSpec("t", 1.0, 2, {"u": 0.25, "w": 0.75})
    assert prob_same_false(0.5, 0.5, task) == pytest.approx(0.25 * (0.0625 + 0.5625))
    assert prob_same_false(0.5, 0.5, TaskSpec("t", 1.0, 4)) == pytest.approx(0.25 / 4)


@settings(max_examples=300, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.integers(1, 50))
def test_three_cases_partition_probability(a, b, num):
    ps, pf = prob_same_true(a, b), prob_same_false(a, b, num)
    assert abs(ps + pf + prob_different(ps, pf) - 1.0) <= 1e-12


def test_clamp_and_domain():
    assert clamp_accuracy(0.0) == 1e-6
    assert clamp_accuracy(1.0) == 1.0 - 1e-6
    for bad in (-0.1, 1.1, float("nan")):
        with pytest.raises(DomainError):
            prob_same_true(bad, 0.5)


def test_partition_table1_workers_1_and_2():
    inst = table1_instance()
    part = partition_shared_tasks(1, 2, inst, inst.ground_truth)
    assert part.same_true == {"Dewitt", "Bernstein", "Halevy"}
    assert part.same_false == set()
    assert part.different == {"Stonebraker", "Carey"}


def test_partition_trivial_cases():
    inst = build({"a": ["x", "x"], "b": ["y", "y"]})
    part = partition_shared_tasks(1, 2, inst, {"a": "x", "b": "y"})
    assert part.same_true == {"a", "b"} and not part.same_false and not part.different
    disjoint = build({"a": ["x", None], "b": [None, "y"]})
    assert partition_shared_tasks(1, 2, disjoint, {}) == SharedTaskPartition(frozenset(), frozenset(), frozenset())


def test_likelihood_hand_values():
    part = SharedTaskPartition(frozenset({"s"}), frozenset(), frozenset())
    assert likelihood_independent(part, {"s": 0.72}, {}, {}) == pytest.approx(math.log(0.72))
    two_d = SharedTaskPartition(frozenset(), frozenset(), frozenset({"d1", "d2"}))
    assert likelihood_independent(two_d, {}, {}, {"d1": 0.5, "d2": 0.5}) == pytest.approx(math.log(0.25))
    assert likelihood_dependent(part, {"s": 0.9}, {"s": 0.72}, {}, {}, 0.5) == pytest.approx(math.log(0.81))
    with pytest.raises(DomainError):
        likelihood_dependent(part, {"s": 0.9}, {"s": 0.72}, {}, {}, 1.5)


def test_certain_copy_never_disagrees():
    part = SharedTaskPartition(frozenset(), frozenset(), frozenset({"d"}))
    assert likelihood_dependent(part, {"d": 0.5}, {}, {}, {"d": 0.5}, 1.0) == -math.inf


def test_posterior_matches_direct_evaluation_on_shared_false_fixture():
    # two workers agreeing on three values the current truth calls false
    inst = build({t: ["x", "x", "y"] for t in ("a", "b", "c")}, num_false=2)
    truth = {t: "y" for t in ("a", "b", "c")}
    acc = AccuracyMatrix.constant(inst, 0.5)
    params = Params(alpha=0.2, copy_prob=0.8)
    got = dependence_posterior(1, 2, inst, truth, acc, params)
    want = direct_posterior("fff", [0.5] * 3, [0.5] * 3, 2, 0.8, 0.2)
    assert got == pytest.approx(want, abs=1e-12)
    assert got[0] > 0.1 and got[1] > 0.1


def test_posterior_random_pairs_match_direct_evaluation():
    rng = np.random.default_rng(7)
    for _ in range(200):
        k = int(rng.integers(1, 8))
        kinds = "".join(rng.choice(list("sfd"), size=k))
        a = rng.uniform(0.05, 0.95, k)
        b = rng.uniform(0.05, 0.95, k)
        num = int(rng.integers(1, 5))
        r = float(rng.uniform(0, 0.95))
        alpha = float(rng.uniform(0.01, 0.9))
        rows, truth, entries = {}, {}, {}
        for j, kind in enumerate(kinds):
            rows[j] = {"s": ["t", "t"], "f": ["x", "x"], "d": ["t", "x"]}[kind]
            truth[j] = "t"
            entries[(1, j)], entries[(2, j)] = a[j], b[j]
        inst = build(rows, num_false=num)
        got = dependence_posterior(1, 2, inst, truth, AccuracyMatrix(entries), Params(alpha=alpha, copy_prob=r))
        assert got == pytest.approx(direct_posterior(kinds, a, b, num, r, alpha), rel=1e-9, abs=1e-12)
        assert abs(sum(got) - 1.0) <= 1e-9


def test_zero_copy_probability_returns_prior():
    inst = table1_instance()
    acc = AccuracyMatrix.constant(inst, 0.7)
    for alpha in (0.05, 0.2, 0.6):
        fwd, bwd, ind = dependence_posterior(3, 4, inst, inst.ground_truth, acc, Params(alpha=alpha, copy_prob=0.0))
        assert abs(fwd - alpha / 2) <= 1e-12 and abs(bwd - alpha / 2) <= 1e-12
        assert abs(ind - (1 - alpha)) <= 1e-12


def test_more_shared_false_values_raise_combined_dependence():
    rng = np.random.default_rng(3)
    for _ in range(100):
        base = {f"d{j}": ["t", "u"] for j in range(int(rng.integers(0, 4)))}
        base.update({f"s{j}": ["t", "t"] for j in range(int(rng.integers(0, 4)))})
        k = int(rng.integers(0, 4))
        with_k = dict(base, **{f"f{j}": ["x", "x"] for j in range(k)})
        with_k1 = dict(base, **{f"f{j}": ["x", "x"] for j in range(k + 1)})
        a1, a2 = rng.uniform(0.1, 0.9, 2)
        params = Params(alpha=float(rng.uniform(0.05, 0.5)), copy_prob=float(rng.uniform(0.1, 0.9)))

        def combined(rows):
            inst = build(rows, num_false=2, k=2)
            acc = AccuracyMatrix({**{(1, t): a1 for t in rows}, **{(2, t): a2 for t in rows}})
            fwd, bwd, _ = dependence_posterior(1, 2, inst, {t: "t" for t in rows}, acc, params)
            return fwd, bwd

        f0, b0 = combined(with_k)
        f1, b1 = combined(with_k1)
        assert f1 + b1 >= f0 + b0 - 1e-12
        if a1 == a2:
            assert f1 >= f0 - 1e-12


def test_two_hypothesis_mode_is_the_closed_form():
    inst = build({t: ["x", "x", "y"] for t in ("a", "b")}, num_false=2)
    truth = {"a": "y", "b": "y"}
    acc = AccuracyMatrix.constant(inst, 0.6)
    fwd, bwd, ind = dependence_posterior(1, 2, inst, truth, acc, Params(alpha=0.3, copy_prob=0.5, two_hypothesis=True))
    pf = 0.4 * 0.4 / 2
    ratio = (0.4 * 0.5 + pf * 0.5) / pf
    want = 1 / (1 + (0.7 / 0.3) * (1 / ratio) ** 2)
    assert fwd == pytest.approx(want, rel=1e-12) and bwd == pytest.approx(want, rel=1e-12)
    assert ind == pytest.approx(1 - want)


@pytest.mark.parametrize("two_hyp", [False, True])
def test_vectorised_posteriors_match_pairwise(two_hyp):
    rng = np.random.default_rng(11)
    for trial in range(15):
        n, m = int(rng.integers(2, 7)), int(rng.integers(1, 7))
        rows = {}
        for j in range(m):
            rows[j] = [None if rng.random() < 0.25 else str(rng.choice(list("abc"))) for _ in range(n)]
            if all(v is None for v in rows[j]):
                rows[j][0] = "a"
        inst = build(rows, num_false=int(rng.integers(1, 4)))
        idx = ObservationIndex(inst)
        truth = {j: str(rng.choice(list("abc"))) for j in range(m)}
        arr = np.where(idx.perform, rng.uniform(0, 1, idx.perform.shape), 0.0)
        acc = AccuracyMatrix.from_array(idx, arr)
        params = Params(alpha=0.25, copy_prob=0.6, two_hypothesis=two_hyp)
        post = all_posteriors(idx, idx.truth_flags(truth), arr, params)
        for a in range(n):
            for b in range(a + 1, n):
                fwd, bwd, ind = dependence_posterior(a + 1, b + 1, inst, truth, acc, params)
                assert post.directed(a + 1, b + 1) == pytest.approx(fwd, abs=1e-12)
                assert post.directed(b + 1, a + 1) == pytest.approx(bwd, abs=1e-12)
                assert post.independent(a + 1, b + 1) == pytest.approx(ind, abs=1e-12)
                if not two_hyp:
                    assert abs(fwd + bwd + ind - 1) <= 1e-9
