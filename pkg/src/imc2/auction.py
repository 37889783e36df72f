"""Greedy reverse auction with critical payments, plus comparison baselines.

Workers are selected by effective accuracy unit cost,
``b_i / sum_j min(residual_j, A_ij)``, until every task's accuracy
requirement is covered.  Each winner is paid the largest bid at which it
would still have been selected in the run without it.  All ties go to the
smaller worker id.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .errors import InfeasibleCoverage, InsufficientCompetition, OracleTooLarge
from .model import ID, AccuracyMatrix, Instance, WorkerBid, id_key

RESIDUAL_TOL = 1e-12
OPT_GUARD = 20


@dataclass(frozen=True)
class AuctionOutcome:
    winners: tuple
    payments: Mapping[ID, float]
    social_cost: float
    total_payment: float
    residual: Mapping[ID, float]
    trace: tuple = field(default=(), repr=False)

    def to_json(self, bounds: "BoundConstants | None" = None) -> dict:
        doc = {
            "winners": list(self.winners),
            "payments": {str(k): v for k, v in self.payments.items()},
            "social_cost": self.social_cost,
            "total_payment": self.total_payment,
            "residual": {str(k): v for k, v in self.residual.items()},
            "trace": [
                {"worker": w, "residual_before": {str(k): v for k, v in res.items()}}
                for w, res in self.trace
            ],
        }
        if bounds is not None:
            doc["bounds"] = bounds.__dict__.copy()
        return doc


@dataclass(frozen=True)
class BoundConstants:
    delta_v: float
    omega: float
    bound_eps: float
    h_omega: float
    factor: float


class _Market:
    """Arrays for one auction: rows follow id order, columns task order."""

    def __init__(self, inst: Instance, accuracy, theta: Mapping | None = None):
        self.workers = sorted(inst.workers, key=lambda w: id_key(w.worker_id))
        self.ids = [w.worker_id for w in self.workers]
        self.task_ids = [t.task_id for t in inst.tasks]
        tpos = {t: j for j, t in enumerate(self.task_ids)}
        get = accuracy.get if isinstance(accuracy, AccuracyMatrix) else (lambda w, t: accuracy.get((w, t), 0.0))
        self.acc = np.zeros((len(self.ids), len(self.task_ids)))
        for i, w in enumerate(self.workers):
            for t in w.task_set:
                if t in tpos:
                    self.acc[i, tpos[t]] = get(w.worker_id, t)
        self.bids = np.array([float(w.bid_price) for w in self.workers])
        self.costs = np.array([float(w.cost) for w in self.workers])
        if theta is None:
            self.theta = np.array([float(t.theta) for t in inst.tasks])
        else:
            self.theta = np.array([float(theta[t]) for t in self.task_ids])

    def uncoverable(self, exclude: int | None = None) -> list:
        acc = self.acc if exclude is None else np.delete(self.acc, exclude, axis=0)
        short = acc.sum(0) < self.theta - RESIDUAL_TOL
        return [t for t, s in zip(self.task_ids, short) if s]

    def residual_map(self, residual: np.ndarray) -> dict:
        return dict(zip(self.task_ids, residual.tolist()))


def _coverage(acc: np.ndarray, residual: np.ndarray) -> np.ndarray:
    return np.minimum(residual[None, :], acc).sum(1)


def _decrement(residual: np.ndarray, row: np.ndarray) -> np.ndarray:
    out = residual - np.minimum(residual, row)
    out[out < RESIDUAL_TOL] = 0.0
    return out


def _greedy_unit_cost(market: _Market, exclude: int | None = None):
    """Yield (worker index, residual before the pick, coverage vector) per round."""
    residual = market.theta.copy()
    residual[residual < RESIDUAL_TOL] = 0.0
    available = np.ones(len(market.ids), dtype=bool)
    if exclude is not None:
        available[exclude] = False
    while residual.sum() > 0:
        cover = _coverage(market.acc, residual)
        cand = available & (cover > 0)
        if not cand.any():
            raise InfeasibleCoverage([t for t, r in zip(market.task_ids, residual) if r > 0])
        unit = np.full(len(cover), np.inf)
        unit[cand] = market.bids[cand] / cover[cand]
        i = int(np.argmin(unit))
        yield i, residual, cover
        residual = _decrement(residual, market.acc[i])
        available[i] = False


def effective_unit_cost(worker: WorkerBid, residual: Mapping, accuracy) -> float:
    """Bid per unit of still-needed accuracy the worker covers; ``inf`` once exhausted."""
    get = accuracy.get if isinstance(accuracy, AccuracyMatrix) else (lambda w, t: accuracy.get((w, t), 0.0))
    cover = sum(min(residual.get(t, 0.0), get(worker.worker_id, t)) for t in worker.task_set)
    if cover <= 0:
        return math.inf
    return worker.bid_price / cover


def select_winners(inst: Instance, accuracy, theta: Mapping | None = None) -> tuple[tuple, list]:
    """Winner selection phase.  Returns winners in pick order and the residual trace."""
    market = _Market(inst, accuracy, theta)
    short = market.uncoverable()
    if short:
        raise InfeasibleCoverage(short)
    order, trace = [], []
    for i, residual, _ in _greedy_unit_cost(market):
        order.append(market.ids[i])
        trace.append((market.ids[i], market.residual_map(residual)))
    return tuple(order), trace


def _payments(market: _Market, winners: list[int]) -> np.ndarray:
    pay = np.zeros(len(market.ids))
    for w in winners:
        short = market.uncoverable(exclude=w)
        if short:
            raise InsufficientCompetition(market.ids[w], short)
        best = 0.0
        for k, residual, cover in _greedy_unit_cost(market, exclude=w):
            own = np.minimum(residual, market.acc[w]).sum()
            best = max(best, own / cover[k] * market.bids[k])
        pay[w] = best
    return pay


def compute_payments(inst: Instance, accuracy, winners, theta: Mapping | None = None) -> dict:
    """Critical payment for every winner; losers get 0."""
    market = _Market(inst, accuracy, theta)
    pos = {w: i for i, w in enumerate(market.ids)}
    pay = _payments(market, [pos[w] for w in winners])
    return dict(zip(market.ids, pay.tolist()))


def run_reverse_auction(inst: Instance, accuracy, theta: Mapping | None = None) -> AuctionOutcome:
    market = _Market(inst, accuracy, theta)
    short = market.uncoverable()
    if short:
        raise InfeasibleCoverage(short)
    order, trace = [], []
    residual = market.theta.copy()
    for i, res, _ in _greedy_unit_cost(market):
        order.append(i)
        trace.append((market.ids[i], market.residual_map(res)))
        residual = _decrement(res, market.acc[i])
    pay = _payments(market, order)
    residual[residual < RESIDUAL_TOL] = 0.0
    return AuctionOutcome(
        winners=tuple(market.ids[i] for i in order),
        payments=dict(zip(market.ids, pay.tolist())),
        social_cost=float(market.costs[order].sum()),
        total_payment=float(pay.sum()),
        residual=market.residual_map(residual),
        trace=tuple(trace),
    )


def _greedy_by(market: _Market, key) -> tuple:
    short = market.uncoverable()
    if short:
        raise InfeasibleCoverage(short)
    residual = market.theta.copy()
    residual[residual < RESIDUAL_TOL] = 0.0
    available = np.ones(len(market.ids), dtype=bool)
    order = []
    while residual.sum() > 0:
        cover = _coverage(market.acc, residual)
        cand = available & (cover > 0)
        score = np.where(cand, key(cover), np.inf)
        i = int(np.argmin(score))
        order.append(i)
        available[i] = False
        residual = _decrement(residual, market.acc[i])
    return tuple(market.ids[i] for i in order)


def run_ga(inst: Instance, accuracy, theta: Mapping | None = None) -> tuple:
    """Greedy by largest marginal accuracy coverage, ignoring bids."""
    market = _Market(inst, accuracy, theta)
    return _greedy_by(market, lambda cover: -cover)


def run_gb(inst: Instance, accuracy, theta: Mapping | None = None) -> tuple:
    """Greedy by lowest bid among workers that still add coverage."""
    market = _Market(inst, accuracy, theta)
    return _greedy_by(market, lambda cover: market.bids)


def social_cost(inst: Instance, winners) -> float:
    costs = {w.worker_id: w.cost for w in inst.workers}
    return float(sum(costs[w] for w in winners))


def brute_force_opt(inst: Instance, accuracy, theta: Mapping | None = None, guard: int = OPT_GUARD) -> tuple[float, tuple]:
    """Exhaustive minimum-cost feasible winner set (true costs when known)."""
    market = _Market(inst, accuracy, theta)
    n = len(market.ids)
    if n > guard:
        raise OracleTooLarge(f"{n} workers exceed the brute-force guard of {guard}")
    short = market.uncoverable()
    if short:
        raise InfeasibleCoverage(short)
    bits = np.arange(n)
    best_cost, best_mask = math.inf, None
    chunk = 1 << 16
    for start in range(0, 1 << n, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n))
        sel = ((masks[:, None] >> bits) & 1).astype(float)
        ok = np.all(sel @ market.acc >= market.theta - RESIDUAL_TOL, axis=1)
        if not ok.any():
            continue
        cost = np.where(ok, sel @ market.costs, np.inf)
        k = int(np.argmin(cost))
        if cost[k] < best_cost:
            best_cost, best_mask = float(cost[k]), int(masks[k])
    chosen = tuple(market.ids[i] for i in range(n) if best_mask >> i & 1)
    return best_cost, chosen


def harmonic(x: float) -> float:
    """H_x = 1 + 1/2 + ... + 1/ceil(x); 0 for x <= 0."""
    k = math.ceil(x - 1e-9)
    return sum(1.0 / i for i in range(1, k + 1)) if k > 0 else 0.0


def bound_constants(inst: Instance, accuracy, theta: Mapping | None = None) -> BoundConstants:
    """Constants of the greedy approximation guarantee (factor = 2 * eps * H_omega)."""
    market = _Market(inst, accuracy, theta)
    acc = market.acc
    positive = acc[acc > 0]
    if positive.size == 0:
        raise ValueError("no positive accuracy in the instance")
    delta_v = float(positive.min())
    omega = float(market.theta.sum()) / delta_v
    sizes = np.array([len(w.task_set) for w in market.workers], dtype=float)
    bound_eps = float((acc.max(axis=1) * sizes * market.bids).max())
    h = harmonic(omega)
    return BoundConstants(delta_v, omega, bound_eps, h, 2.0 * bound_eps * h)


def worker_utility(worker_id: ID, outcome: AuctionOutcome, inst: Instance) -> float:
    """Payment minus true cost for winners, 0 for losers."""
    if worker_id not in outcome.winners:
        return 0.0
    return outcome.payments[worker_id] - inst.worker(worker_id).cost


def platform_utility(outcome: AuctionOutcome, completion_value: float) -> float:
    """Value of getting every task covered minus what the platform pays."""
    return completion_value - outcome.total_payment
