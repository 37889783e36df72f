"""The DATE iteration and the MV / NC / ED truth-discovery baselines."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .dependence import DependencePosteriors, all_posteriors
from .errors import NoObservationError
from .estimation import _task_accuracy, _task_probs, _task_support, similarity_matrix
from .independence import ED_GUARD, enumerated_independence, greedy_independence
from .model import AccuracyMatrix, Instance, ObservationIndex, Params, TruthEstimate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DateResult:
    truth: TruthEstimate
    accuracy: AccuracyMatrix
    posteriors: DependencePosteriors | None
    iterations: int
    converged: bool


def _require_observations(index: ObservationIndex) -> None:
    for j, t in enumerate(index.task_ids):
        if len(index.values[j]) == 0:
            raise NoObservationError(t)


def _similarities(index: ObservationIndex, sim, rho: float) -> list:
    if rho == 0 or sim == "exact":
        return [None] * index.m
    return [similarity_matrix(vals, sim) for vals in index.values]


def _vote(index: ObservationIndex, sims: list, rho: float) -> tuple[np.ndarray, list]:
    picks = np.zeros(index.m, dtype=np.int64)
    probs = []
    for j in range(index.m):
        inc = index.incidence[j]
        counts = inc.sum(0).astype(float)
        _, adjusted = _task_support(np.ones(inc.shape[0]), inc, None, sims[j], rho)
        picks[j] = int(np.argmax(adjusted))
        probs.append(counts / counts.sum())
    return picks, probs


def _estimate(index: ObservationIndex, picks: np.ndarray, probs: list) -> TruthEstimate:
    values, prob_maps = {}, {}
    for j, t in enumerate(index.task_ids):
        vals = index.values[j]
        values[t] = vals[picks[j]]
        prob_maps[t] = dict(zip(vals, np.asarray(probs[j]).tolist()))
    return TruthEstimate(values, prob_maps)


def run_mv(inst: Instance, sim="exact", rho: float = 0.0) -> TruthEstimate:
    """Majority vote; with ``rho > 0`` votes of similar values are merged in."""
    index = ObservationIndex(inst)
    _require_observations(index)
    picks, probs = _vote(index, _similarities(index, sim, rho), rho)
    return _estimate(index, picks, probs)


def _truth_flags(index: ObservationIndex, picks: np.ndarray) -> np.ndarray:
    return index.truth_flags({t: index.values[j][picks[j]] for j, t in enumerate(index.task_ids)})


def _iterate(inst: Instance, params: Params, mode: str) -> DateResult:
    index = ObservationIndex(inst)
    _require_observations(index)
    n, m = index.n, index.m
    r = params.copy_prob
    sims = _similarities(index, params.similarity, params.rho)

    acc = np.where(index.perform, params.init_accuracy, 0.0)
    picks, _ = _vote(index, sims, params.rho)
    probs: list = [None] * m
    post = None
    k = 0
    converged = False
    while k < params.max_iters:
        if mode != "nc":
            post = all_posteriors(index, _truth_flags(index, picks), acc, params)
        new_picks = np.empty_like(picks)
        for j in range(m):
            rows = index.task_workers[j]
            inc = index.incidence[j]
            indep = None
            if mode != "nc":
                indep = np.ones(inc.shape, dtype=float)
                for v in range(inc.shape[1]):
                    local = np.flatnonzero(inc[:, v])
                    if len(local) < 2:
                        continue
                    prov = rows[local]
                    dep = post.directed_matrix[np.ix_(prov, prov)]
                    if mode == "ed":
                        indep[local, v] = enumerated_independence(dep, r, ED_GUARD)
                    else:
                        indep[local, v] = greedy_independence(dep, r, params.first_pick)[1]
            p = _task_probs(acc[rows, j], inc, index.log_h[j])
            acc[rows, j] = _task_accuracy(inc, p)
            _, adjusted = _task_support(acc[rows, j], inc, indep, sims[j], params.rho)
            new_picks[j] = int(np.argmax(adjusted))
            probs[j] = p
        k += 1
        if np.array_equal(new_picks, picks):
            converged = True
            break
        picks = new_picks
    logger.debug("%s finished after %d iterations (converged=%s)", mode, k, converged)
    return DateResult(
        truth=_estimate(index, picks, probs),
        accuracy=AccuracyMatrix.from_array(index, acc),
        posteriors=post,
        iterations=k,
        converged=converged,
    )


def run_date(inst: Instance, params: Params = Params()) -> DateResult:
    """Iterate dependence, independence and estimation until the truth is stable."""
    return _iterate(inst, params, "date")


def run_nc(inst: Instance, params: Params = Params()) -> DateResult:
    """DATE with every worker treated as independent (estimation step only)."""
    return _iterate(inst, params, "nc")


def run_ed(inst: Instance, params: Params = Params()) -> DateResult:
    """DATE with independence averaged over every provider insertion order."""
    return _iterate(inst, params, "ed")
