"""Value truth probabilities, worker accuracies and support counts.

The public functions work on plain mappings for one task; the ``_task_*``
helpers are the array versions the engine calls every round.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .dependence import ACC_HI, ACC_LO, clamp_accuracy
from .errors import NoObservationError, UndefinedAccuracyError
from .model import ID, AccuracyMatrix, TaskSpec

SimilarityFn = Callable[[str, str], float]


@dataclass(frozen=True)
class SupportTable:
    raw: Mapping[str, float]
    adjusted: Mapping[str, float]


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit insert, delete and substitute costs."""
    if len(a) < len(b):
        a, b = b, a
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def default_similarity(v: str, v2: str) -> float:
    """1 - edit distance / longer length, case-folded."""
    a, b = v.casefold(), v2.casefold()
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return 1.0 - edit_distance(a, b) / longest


def exact_similarity(v: str, v2: str) -> float:
    return 1.0 if v == v2 else 0.0


def resolve_similarity(sim: str | SimilarityFn) -> SimilarityFn:
    if callable(sim):
        return sim
    return {"exact": exact_similarity, "edit": default_similarity}[sim]


def similarity_matrix(values: Sequence[str], sim: str | SimilarityFn) -> np.ndarray:
    fn = resolve_similarity(sim)
    k = len(values)
    out = np.eye(k)
    for a in range(k):
        for b in range(a + 1, k):
            out[a, b] = out[b, a] = fn(values[a], values[b])
    return out


def _acc_getter(accuracy, task_id):
    if isinstance(accuracy, AccuracyMatrix):
        return lambda w: accuracy.get(w, task_id)
    return lambda w: accuracy[w]


def value_truth_prob(
    task: TaskSpec,
    providers: Mapping[str, Sequence[ID]],
    accuracy: Mapping[ID, float] | AccuracyMatrix,
) -> dict[str, float]:
    """P^j(v) for every observed value of one task.

    ``providers`` maps each observed value to the workers who gave it and
    ``accuracy`` maps a worker to its accuracy on this task (an
    :class:`AccuracyMatrix` also works).  Each provider of v contributes
    num * A / (1 - A); with a false-value histogram the factor becomes
    A / ((1 - A) * h_v).
    """
    values = sorted(v for v, ws in providers.items() if ws)
    if not values:
        raise NoObservationError(task.task_id)
    get = _acc_getter(accuracy, task.task_id)
    num = task.num_false if task.num_false is not None else max(1, len(values) - 1)
    scores = []
    for v in values:
        if task.false_dist:
            log_h = math.log(task.false_dist.get(v, 1.0 / num))
        else:
            log_h = -math.log(num)
        s = 0.0
        for w in providers[v]:
            a = clamp_accuracy(get(w))
            s += math.log(a) - math.log1p(-a) - log_h
        scores.append(s)
    scores = np.array(scores)
    p = np.exp(scores - scores.max())
    p /= p.sum()
    return dict(zip(values, p.tolist()))


def worker_accuracy(submitted: Sequence[str], probs: Mapping[str, float]) -> float:
    """Mean truth probability of the values a worker submitted for a task."""
    if not submitted:
        raise UndefinedAccuracyError("worker submitted no value for this task")
    return sum(probs[v] for v in submitted) / len(submitted)


def support_counts(
    providers: Mapping[str, Sequence[ID]],
    accuracy: Mapping[ID, float],
    independence: Mapping[tuple, float],
    sim: str | SimilarityFn = "exact",
    rho: float = 0.0,
) -> SupportTable:
    """Accuracy-weighted, copy-discounted vote mass per value.

    ``independence`` is keyed by (value, worker); missing entries count as 1.
    The adjusted count adds rho * raw(v') * sim(v, v') over the other values.
    """
    values = sorted(providers)
    raw = {v: sum(accuracy[w] * independence.get((v, w), 1.0) for w in providers[v]) for v in values}
    if rho == 0:
        return SupportTable(raw, dict(raw))
    fn = resolve_similarity(sim)
    adjusted = {
        v: raw[v] + rho * sum(raw[u] * fn(v, u) for u in values if u != v)
        for v in values
    }
    return SupportTable(raw, adjusted)


def pick_truth(table: SupportTable | Mapping[str, float]) -> str:
    """Value with the largest adjusted support; ties go to the smallest token."""
    supports = table.adjusted if isinstance(table, SupportTable) else table
    if not supports:
        raise ValueError("empty support table")
    return min(supports, key=lambda v: (-supports[v], v))


# ---------------------------------------------------------------------------
# array versions used by the engine

def _task_probs(acc_rows: np.ndarray, incidence: np.ndarray, log_h: np.ndarray) -> np.ndarray:
    a = np.clip(acc_rows, ACC_LO, ACC_HI)
    logit = np.log(a) - np.log1p(-a)
    scores = incidence.T.astype(float) @ logit - incidence.sum(0) * log_h
    p = np.exp(scores - scores.max())
    return p / p.sum()


def _task_accuracy(incidence: np.ndarray, probs: np.ndarray) -> np.ndarray:
    return (incidence @ probs) / incidence.sum(1)


def _task_support(
    acc_rows: np.ndarray,
    incidence: np.ndarray,
    indep: np.ndarray | None,
    sim: np.ndarray | None,
    rho: float,
) -> tuple[np.ndarray, np.ndarray]:
    weights = incidence * acc_rows[:, None]
    if indep is not None:
        weights = weights * indep
    raw = weights.sum(0)
    if rho == 0 or sim is None:
        return raw, raw
    return raw, raw + rho * (sim @ raw - np.diag(sim) * raw)
