"""Probability that each provider of a value produced it independently.

Providers of one value are ordered greedily.  The first one is an endpoint of
the provider pair with the highest combined dependence (the endpoint more
likely to be the source; ties go to the smaller id).  Each later pick is the
remaining provider with the largest dependence on someone already placed.
A provider's independence is the product of ``1 - r * P(i -> i')`` over its
predecessors.  ``first_pick="min"`` starts from the least dependent pair
instead.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .dependence import DependencePosteriors
from .errors import EnumerationTooLarge
from .model import ID, id_key

ED_GUARD = 12


@dataclass(frozen=True)
class ProviderOrdering:
    ordered: tuple
    independence: Mapping[ID, float]


def _first_position(dep: np.ndarray, first_pick: str) -> int:
    k = dep.shape[0]
    sym = dep + dep.T
    best, best_pair = None, (0, 1)
    for a in range(k - 1):
        for b in range(a + 1, k):
            val = sym[a, b]
            if best is None or (val > best if first_pick == "max" else val < best):
                best, best_pair = val, (a, b)
    a, b = best_pair
    # the endpoint less likely to be the copier goes first
    return b if dep[a, b] > dep[b, a] else a


def greedy_order(dep: np.ndarray, first_pick: str = "max") -> np.ndarray:
    """Greedy provider order on a local (k, k) matrix, dep[a, b] = P(a -> b).

    Local positions must already be sorted by worker id so that "first
    index wins" implements the smallest-id tie-break.
    """
    k = dep.shape[0]
    if k <= 1:
        return np.arange(k)
    first = _first_position(dep, first_pick)
    order = [first]
    placed = np.zeros(k, dtype=bool)
    placed[first] = True
    score = dep[:, first].copy()
    for _ in range(k - 1):
        cand = np.where(placed, -np.inf, score)
        nxt = int(np.argmax(cand))
        order.append(nxt)
        placed[nxt] = True
        score = np.maximum(score, dep[:, nxt])
    return np.array(order)


def independence_along(dep: np.ndarray, order: Sequence[int], r: float) -> np.ndarray:
    """I for every local position given an insertion order; result aligned to local positions."""
    order = np.asarray(order)
    k = len(order)
    factors = 1.0 - r * dep[np.ix_(order, order)]
    lower = np.tril(np.ones((k, k), dtype=bool), -1)
    along = np.where(lower, factors, 1.0).prod(axis=1)
    out = np.empty(k)
    out[order] = along
    return out


def greedy_independence(dep: np.ndarray, r: float, first_pick: str = "max") -> tuple[np.ndarray, np.ndarray]:
    order = greedy_order(dep, first_pick)
    return order, independence_along(dep, order, r)


def enumerated_independence(dep: np.ndarray, r: float, guard: int = ED_GUARD) -> np.ndarray:
    """I averaged over every insertion order of the providers (exhaustive)."""
    k = dep.shape[0]
    if k > guard:
        raise EnumerationTooLarge(f"{k} providers exceed the enumeration guard of {guard}")
    if k <= 1:
        return np.ones(k)
    factors = 1.0 - r * dep
    total = np.zeros(k)
    count = 0
    for perm in itertools.permutations(range(k)):
        running = np.ones(k)
        for pos, p in enumerate(perm):
            if pos:
                running[p] = np.prod(factors[p, list(perm[:pos])])
        total += running
        count += 1
    return total / count


def _local_matrix(providers: Sequence[ID], posteriors) -> tuple[list, np.ndarray]:
    provs = sorted(providers, key=id_key)
    k = len(provs)
    dep = np.zeros((k, k))
    for a in range(k):
        for b in range(k):
            if a != b:
                dep[a, b] = _lookup(posteriors, provs[a], provs[b])
    return provs, dep


def _lookup(posteriors, a, b) -> float:
    if isinstance(posteriors, DependencePosteriors):
        return posteriors.directed(a, b)
    return float(posteriors.get((a, b), 0.0))


def order_providers(providers: Sequence[ID], posteriors, r: float = 0.4, first_pick: str = "max") -> ProviderOrdering:
    """Order the providers of one value and attach their independence probabilities."""
    if not providers:
        raise ValueError("provider set must be nonempty")
    provs, dep = _local_matrix(providers, posteriors)
    order, ind = greedy_independence(dep, r, first_pick)
    return ProviderOrdering(tuple(provs[p] for p in order), {provs[p]: float(ind[p]) for p in range(len(provs))})


def independence_probability(worker: ID, predecessors: Sequence[ID], posteriors, r: float) -> float:
    """Product of (1 - r * P(worker -> w)) over the already placed workers."""
    out = 1.0
    for w in predecessors:
        if w != worker:
            out *= 1.0 - r * _lookup(posteriors, worker, w)
    return out

