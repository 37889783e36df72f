"""Directed copy posteriors between pairs of workers.

For a pair (i, i') the tasks both answered are split into same-true,
same-false and different.  Three hypotheses are compared: i copies i',
i' copies i, and independence, with priors alpha/2, alpha/2 and 1 - alpha.
Likelihoods are accumulated in log space.

With ``Params.two_hypothesis`` each direction is instead normalised only
against independence with prior alpha (a pairwise closed form).
In that mode the three numbers no longer form a distribution; the
independence entry reports the complement of the stronger direction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import DomainError, IMC2Error
from .model import ID, AccuracyMatrix, Instance, ObservationIndex, Params, TaskSpec, observed_values

ACC_LO = 1e-6
ACC_HI = 1.0 - 1e-6


def clamp_accuracy(a):
    """Clamp accuracies into [1e-6, 1 - 1e-6]; values outside [0, 1] are rejected."""
    arr = np.asarray(a, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any(arr < 0.0) or np.any(arr > 1.0):
        raise DomainError(f"accuracy outside [0, 1]: {a!r}")
    out = np.clip(arr, ACC_LO, ACC_HI)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SharedTaskPartition:
    same_true: frozenset
    same_false: frozenset
    different: frozenset

    @property
    def shared(self) -> frozenset:
        return self.same_true | self.same_false | self.different


@dataclass(frozen=True)
class DependencePosteriors:
    """Posterior matrices indexed by position in ``worker_ids``.

    ``directed[a, b]`` is P(a copies b | D); ``independent`` is symmetric.
    """

    worker_ids: tuple
    directed_matrix: np.ndarray
    independent_matrix: np.ndarray

    def _pos(self, w):
        return self.worker_ids.index(w)

    def directed(self, i: ID, i2: ID) -> float:
        return float(self.directed_matrix[self._pos(i), self._pos(i2)])

    def independent(self, i: ID, i2: ID) -> float:
        return float(self.independent_matrix[self._pos(i), self._pos(i2)])

    def as_dicts(self) -> tuple[dict, dict]:
        directed, indep = {}, {}
        ids = self.worker_ids
        for a in range(len(ids)):
            for b in range(len(ids)):
                if a == b:
                    continue
                directed[(ids[a], ids[b])] = float(self.directed_matrix[a, b])
                if a < b:
                    indep[frozenset((ids[a], ids[b]))] = float(self.independent_matrix[a, b])
        return directed, indep


def prob_same_true(a: float, a2: float) -> float:
    return clamp_accuracy(a) * clamp_accuracy(a2)


def _collision(task) -> float:
    if isinstance(task, TaskSpec):
        if task.false_dist:
            return sum(h * h for h in task.false_dist.values())
        if task.num_false is None:
            raise DomainError(f"task {task.task_id!r} has no num_false")
        num = task.num_false
    else:
        num = task
    if num < 1:
        raise DomainError(f"num_false must be >= 1, got {num}")
    return 1.0 / num


def prob_same_false(a: float, a2: float, task: TaskSpec | int) -> float:
    """Chance that two independent workers give the same false value.

    ``task`` is a :class:`TaskSpec` or a bare false-value count.  With a
    false-value histogram the collision mass is sum(h_v ** 2).
    """
    return (1.0 - clamp_accuracy(a)) * (1.0 - clamp_accuracy(a2)) * _collision(task)


def prob_different(ps: float, pf: float) -> float:
    pd = 1.0 - ps - pf
    if pd < -1e-12:
        raise IMC2Error(f"P_s + P_f = {ps + pf} exceeds 1")
    return max(pd, 0.0)


def partition_shared_tasks(i: ID, i2: ID, inst: Instance, current_truth: Mapping) -> SharedTaskPartition:
    """Split the tasks both workers answered by how their values relate to the truth."""
    wa, wb = inst.worker(i), inst.worker(i2)
    st, sf, diff = set(), set(), set()
    for t in wa.values.keys() & wb.values.keys():
        va, vb = set(wa.values[t]), set(wb.values[t])
        if not va or not vb:
            continue
        if va == vb:
            (st if current_truth.get(t) in va else sf).add(t)
        else:
            diff.add(t)
    return SharedTaskPartition(frozenset(st), frozenset(sf), frozenset(diff))


def _safe_log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def likelihood_independent(part: SharedTaskPartition, ps: Mapping, pf: Mapping, pd: Mapping) -> float:
    """log P(D | i and i' independent); the per-task probabilities are keyed by task id."""
    return (sum(_safe_log(ps[t]) for t in part.same_true)
            + sum(_safe_log(pf[t]) for t in part.same_false)
            + sum(_safe_log(pd[t]) for t in part.different))


def likelihood_dependent(
    part: SharedTaskPartition,
    source_acc: Mapping,
    ps: Mapping,
    pf: Mapping,
    pd: Mapping,
    r: float,
) -> float:
    """log P(D | copier -> source); ``source_acc`` holds the copied-from worker's accuracies."""
    if not 0.0 <= r <= 1.0:
        raise DomainError(f"copy probability must be in [0, 1], got {r}")
    total = 0.0
    for t in part.same_true:
        total += _safe_log(source_acc[t] * r + ps[t] * (1.0 - r))
    for t in part.same_false:
        total += _safe_log((1.0 - source_acc[t]) * r + pf[t] * (1.0 - r))
    for t in part.different:
        total += _safe_log(pd[t] * (1.0 - r))
    return total


def _normalise(l_fwd, l_bwd, l_ind, alpha, two_hypothesis):
    """Posterior triple from log-likelihoods (works elementwise on arrays)."""
    la = math.log(alpha / 2.0) if alpha > 0 else -math.inf
    if two_hypothesis:
        lp = math.log(alpha) if alpha > 0 else -math.inf
        l0 = math.log(1.0 - alpha) + l_ind
        fwd = _sigmoid(lp + l_fwd - l0)
        bwd = _sigmoid(lp + l_bwd - l0)
        return fwd, bwd, 1.0 - np.maximum(fwd, bwd)
    a = la + l_fwd
    b = la + l_bwd
    c = math.log(1.0 - alpha) + l_ind
    top = np.maximum(np.maximum(a, b), c)
    ea, eb, ec = np.exp(a - top), np.exp(b - top), np.exp(c - top)
    z = ea + eb + ec
    return ea / z, eb / z, ec / z


def _sigmoid(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        return np.where(x >= 0, 1.0 / (1.0 + np.exp(-np.abs(x))), np.exp(-np.abs(x)) / (1.0 + np.exp(-np.abs(x))))


def dependence_posterior(
    i: ID,
    i2: ID,
    inst: Instance,
    current_truth: Mapping,
    accuracy: AccuracyMatrix | Mapping,
    params: Params = Params(),
) -> tuple[float, float, float]:
    """Return (P(i -> i' | D), P(i' -> i | D), P(i _|_ i' | D)) for one pair."""
    get = accuracy.get if isinstance(accuracy, AccuracyMatrix) else (lambda w, t: accuracy[(w, t)])
    part = partition_shared_tasks(i, i2, inst, current_truth)
    ps, pf, pd, acc_i, acc_i2 = {}, {}, {}, {}, {}
    for t in part.shared:
        task = inst.task(t)
        if task.num_false is None and not task.false_dist:
            dj, _ = observed_values(inst, t)
            task = TaskSpec(t, task.theta, max(1, len(dj) - 1), None)
        acc_i[t] = clamp_accuracy(get(i, t))
        acc_i2[t] = clamp_accuracy(get(i2, t))
        ps[t] = prob_same_true(acc_i[t], acc_i2[t])
        pf[t] = prob_same_false(acc_i[t], acc_i2[t], task)
        pd[t] = prob_different(ps[t], pf[t])
    r = params.copy_prob
    l_ind = likelihood_independent(part, ps, pf, pd)
    l_fwd = likelihood_dependent(part, acc_i2, ps, pf, pd, r)
    l_bwd = likelihood_dependent(part, acc_i, ps, pf, pd, r)
    fwd, bwd, ind = _normalise(l_fwd, l_bwd, l_ind, params.alpha, params.two_hypothesis)
    return float(fwd), float(bwd), float(ind)


def all_posteriors(
    index: ObservationIndex,
    truth_flags: np.ndarray,
    accuracy: np.ndarray,
    params: Params,
) -> DependencePosteriors:
    """Vectorised posteriors for every ordered worker pair.

    ``truth_flags[i, j]`` says whether worker i's submission for task j
    contains the current truth; ``accuracy`` is the (n, m) matrix.
    """
    n = index.n
    r = params.copy_prob
    acc = np.clip(accuracy, ACC_LO, ACC_HI)
    codes = index.codes
    coll = index.collision
    directed = np.zeros((n, n))
    indep = np.ones((n, n))
    log_keep = math.log(1.0 - r) if r < 1.0 else -math.inf
    for i in range(n - 1):
        rest = slice(i + 1, n)
        ci, cr = codes[i], codes[rest]
        shared = (ci >= 0) & (cr >= 0)
        same = shared & (cr == ci)
        s = same & truth_flags[i]
        f = same & ~truth_flags[i]
        d = shared & ~same
        ai, ar = acc[i], acc[rest]
        ps = ai * ar
        pf = (1.0 - ai) * (1.0 - ar) * coll
        pd = 1.0 - ps - pf
        lps = np.log(np.where(s, ps, 1.0))
        lpf = np.log(np.where(f, pf, 1.0))
        lpd = np.log(np.where(d, pd, 1.0))
        l_ind = lps.sum(1) + lpf.sum(1) + lpd.sum(1)
        nd = d.sum(1)
        d_term = lpd.sum(1) + np.where(nd > 0, nd * log_keep if r < 1.0 else -np.inf, 0.0)
        # i copies the later worker (source = rest)
        l_fwd = (np.log(np.where(s, ar * r + ps * (1.0 - r), 1.0)).sum(1)
                 + np.log(np.where(f, (1.0 - ar) * r + pf * (1.0 - r), 1.0)).sum(1)
                 + d_term)
        # the later worker copies i (source = i)
        l_bwd = (np.log(np.where(s, ai * r + ps * (1.0 - r), 1.0)).sum(1)
                 + np.log(np.where(f, (1.0 - ai) * r + pf * (1.0 - r), 1.0)).sum(1)
                 + d_term)
        fwd, bwd, ind = _normalise(l_fwd, l_bwd, l_ind, params.alpha, params.two_hypothesis)
        directed[i, rest] = fwd
        directed[rest, i] = bwd
        indep[i, rest] = ind
        indep[rest, i] = ind
    np.fill_diagonal(directed, 0.0)
    return DependencePosteriors(index.worker_ids, directed, indep)
