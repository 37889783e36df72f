"""Domain types, instance validation and the shared parameter bundle.

Workers and tasks are referred to by opaque identifiers.  Everything that
has to break a tie between workers does so by :func:`id_key`, i.e. by the
"smallest worker id".  Value tokens are compared as exact strings; fuzzy
matching only happens through the similarity hook in :mod:`imc2.estimation`.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Iterable, Mapping

import numpy as np

from .errors import ValidationError

ID = Hashable

SIMILARITY_NAMES = ("exact", "edit")


def id_key(x) -> tuple:
    """Sort key for opaque ids: numbers numerically, everything else as text."""
    if isinstance(x, bool):
        return (1, str(x))
    if isinstance(x, (int, float)):
        return (0, x, "")
    return (1, str(x))


@dataclass(frozen=True)
class TaskSpec:
    task_id: ID
    theta: float = 0.0
    num_false: int | None = None
    false_dist: Mapping[str, float] | None = None


@dataclass(frozen=True)
class WorkerBid:
    worker_id: ID
    task_set: frozenset
    bid_price: float
    values: Mapping[ID, tuple] = field(default_factory=dict)
    true_cost: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "task_set", frozenset(self.task_set))
        vals = {}
        for t, v in dict(self.values).items():
            vals[t] = (v,) if isinstance(v, str) else tuple(v)
        object.__setattr__(self, "values", vals)

    @property
    def cost(self) -> float:
        """True cost when the simulator knows it, otherwise the bid."""
        return self.bid_price if self.true_cost is None else self.true_cost


@dataclass(frozen=True)
class Instance:
    tasks: tuple
    workers: tuple
    ground_truth: Mapping[ID, str] | None = None

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        object.__setattr__(self, "workers", tuple(self.workers))

    @property
    def n(self) -> int:
        return len(self.workers)

    @property
    def m(self) -> int:
        return len(self.tasks)

    def task(self, task_id) -> TaskSpec:
        for t in self.tasks:
            if t.task_id == task_id:
                return t
        raise KeyError(f"unknown task {task_id!r}")

    def worker(self, worker_id) -> WorkerBid:
        for w in self.workers:
            if w.worker_id == worker_id:
                return w
        raise KeyError(f"unknown worker {worker_id!r}")

    def with_bid(self, worker_id, bid: float) -> "Instance":
        """Copy of the instance where one worker's bid is replaced."""
        workers = tuple(
            WorkerBid(w.worker_id, w.task_set, bid, w.values, w.true_cost)
            if w.worker_id == worker_id else w
            for w in self.workers
        )
        return Instance(self.tasks, workers, self.ground_truth)

    def public(self) -> "Instance":
        """The sealed-bid view: ground truth and true costs stripped."""
        workers = tuple(
            WorkerBid(w.worker_id, w.task_set, w.bid_price, w.values, None)
            for w in self.workers
        )
        return Instance(self.tasks, workers, None)


@dataclass(frozen=True)
class Params:
    """Tuning knobs for the truth-discovery algorithms.

    ``alpha`` may be 0, which switches dependence off entirely (used to
    cross-check DATE against NC).  ``two_hypothesis`` and
    ``first_pick="min"`` select alternative variants (pairwise
    normalisation, least dependent starting pair); see the module docs of
    ``dependence`` and ``independence``.
    """

    alpha: float = 0.2
    init_accuracy: float = 0.5
    copy_prob: float = 0.4
    max_iters: int = 100
    rho: float = 0.0
    beta: float = 1.0
    similarity: str | Callable[[str, str], float] = "exact"
    two_hypothesis: bool = False
    first_pick: str = "max"

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValidationError(f"alpha must be in [0, 1), got {self.alpha}")
        if not 0.0 < self.init_accuracy < 1.0:
            raise ValidationError(f"init_accuracy must be in (0, 1), got {self.init_accuracy}")
        if not 0.0 <= self.copy_prob <= 1.0:
            raise ValidationError(f"copy_prob must be in [0, 1], got {self.copy_prob}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValidationError(f"max_iters must be a positive integer, got {self.max_iters}")
        if not 0.0 <= self.rho <= 1.0:
            raise ValidationError(f"rho must be in [0, 1], got {self.rho}")
        if not self.beta > 0:
            raise ValidationError(f"beta must be positive, got {self.beta}")
        if isinstance(self.similarity, str) and self.similarity not in SIMILARITY_NAMES:
            raise ValidationError(f"unknown similarity {self.similarity!r}")
        if self.first_pick not in ("max", "min"):
            raise ValidationError(f"first_pick must be 'max' or 'min', got {self.first_pick!r}")


@dataclass(frozen=True)
class AccuracyMatrix:
    """Per (worker, task) accuracy; pairs outside a worker's task set read as 0."""

    entries: Mapping[tuple, float]

    def get(self, worker_id, task_id) -> float:
        return self.entries.get((worker_id, task_id), 0.0)

    def to_array(self, index: "ObservationIndex") -> np.ndarray:
        arr = np.zeros((index.n, index.m))
        for (w, t), a in self.entries.items():
            if w in index.w_pos and t in index.t_pos:
                arr[index.w_pos[w], index.t_pos[t]] = a
        return arr

    @classmethod
    def from_array(cls, index: "ObservationIndex", arr: np.ndarray) -> "AccuracyMatrix":
        entries = {}
        for i, w in enumerate(index.worker_ids):
            for j in np.flatnonzero(index.perform[i]):
                entries[(w, index.task_ids[j])] = float(arr[i, j])
        return cls(entries)

    @classmethod
    def constant(cls, inst: Instance, value: float) -> "AccuracyMatrix":
        return cls({(w.worker_id, t): value for w in inst.workers for t in w.task_set})

    def to_json(self) -> dict:
        out: dict = {}
        for (w, t), a in self.entries.items():
            out.setdefault(str(w), {})[str(t)] = a
        return out


@dataclass(frozen=True)
class TruthEstimate:
    values: Mapping[ID, str]
    probs: Mapping[ID, Mapping[str, float]]


@dataclass(frozen=True)
class Violation:
    entity: str
    message: str

    def __str__(self):
        return f"{self.entity}: {self.message}"


def validate_instance(inst: Instance) -> list[Violation]:
    """Return every invariant violation found in ``inst`` (empty if well formed)."""
    out = []
    task_ids = [t.task_id for t in inst.tasks]
    known = set()
    for t in inst.tasks:
        ent = f"task {t.task_id!r}"
        if t.task_id in known:
            out.append(Violation(ent, "duplicate task_id"))
        known.add(t.task_id)
        if not (isinstance(t.theta, (int, float)) and t.theta >= 0 and math.isfinite(t.theta)):
            out.append(Violation(ent, f"theta must be a finite nonnegative number, got {t.theta!r}"))
        if t.num_false is not None and (int(t.num_false) != t.num_false or t.num_false < 1):
            out.append(Violation(ent, f"num_false must be an integer >= 1, got {t.num_false!r}"))
        if t.false_dist is not None:
            hs = list(t.false_dist.values())
            if not hs or any(not (0.0 < h <= 1.0) for h in hs):
                out.append(Violation(ent, "false_dist probabilities must lie in (0, 1]"))
            elif abs(sum(hs) - 1.0) > 1e-9:
                out.append(Violation(ent, f"false_dist sums to {sum(hs):.12g}, not 1"))
    seen = set()
    for w in inst.workers:
        ent = f"worker {w.worker_id!r}"
        if w.worker_id in seen:
            out.append(Violation(ent, "duplicate worker_id"))
        seen.add(w.worker_id)
        if not (isinstance(w.bid_price, (int, float)) and w.bid_price >= 0):
            out.append(Violation(ent, f"bid_price must be nonnegative, got {w.bid_price!r}"))
        if w.true_cost is not None and not w.true_cost >= 0:
            out.append(Violation(ent, f"true_cost must be nonnegative, got {w.true_cost!r}"))
        for t in sorted(w.task_set - known, key=id_key):
            out.append(Violation(ent, f"references unknown task {t!r}"))
        for t, vals in w.values.items():
            if t not in w.task_set:
                out.append(Violation(ent, f"submitted values for task {t!r} outside its task_set"))
            if any(not isinstance(v, str) or v == "" for v in vals):
                out.append(Violation(ent, f"empty or non-string value token for task {t!r}"))
    if inst.ground_truth is not None:
        for t in inst.ground_truth:
            if t not in known:
                out.append(Violation(f"ground_truth {t!r}", "references unknown task"))
    return out


def require_valid(inst: Instance) -> None:
    problems = validate_instance(inst)
    if problems:
        raise ValidationError("; ".join(map(str, problems)))


def observed_values(inst: Instance, task_id) -> tuple[set, dict]:
    """The value set D^j of a task and the providers W_v^j of each value."""
    inst.task(task_id)  # raises KeyError for unknown tasks
    providers: dict[str, set] = {}
    for w in inst.workers:
        for v in w.values.get(task_id, ()):
            providers.setdefault(v, set()).add(w.worker_id)
    return set(providers), providers


class ObservationIndex:
    """Array view of an instance used by the numerical routines.

    Workers are ordered by :func:`id_key`, tasks keep their instance order and
    the observed values of each task are sorted lexicographically, so that
    "first index wins" in an argmax is the documented tie-break.
    """

    def __init__(self, inst: Instance):
        self.inst = inst
        self.workers = sorted(inst.workers, key=lambda w: id_key(w.worker_id))
        self.worker_ids = tuple(w.worker_id for w in self.workers)
        self.task_ids = tuple(t.task_id for t in inst.tasks)
        self.w_pos = {w: i for i, w in enumerate(self.worker_ids)}
        self.t_pos = {t: j for j, t in enumerate(self.task_ids)}
        n, m = len(self.worker_ids), len(self.task_ids)
        self.n, self.m = n, m

        self.perform = np.zeros((n, m), dtype=bool)
        for i, w in enumerate(self.workers):
            for t in w.task_set:
                if t in self.t_pos:
                    self.perform[i, self.t_pos[t]] = True

        self.values: list[tuple] = []
        self.task_workers: list[np.ndarray] = []   # workers with >= 1 value, per task
        self.incidence: list[np.ndarray] = []      # (len(task_workers), |D^j|) bool
        self.codes = np.full((n, m), -1, dtype=np.int64)
        self.num_false = np.ones(m)
        self.collision = np.ones(m)
        self.log_h: list[np.ndarray] = []
        for j, task in enumerate(inst.tasks):
            tid = task.task_id
            vals = sorted({v for w in self.workers for v in w.values.get(tid, ())})
            vpos = {v: k for k, v in enumerate(vals)}
            rows, inc = [], []
            subs: dict[tuple, int] = {}
            for i, w in enumerate(self.workers):
                sub = w.values.get(tid)
                if not sub:
                    continue
                rows.append(i)
                r = np.zeros(len(vals), dtype=bool)
                r[[vpos[v] for v in sub]] = True
                inc.append(r)
                key = tuple(sorted(set(sub)))
                self.codes[i, j] = subs.setdefault(key, len(subs))
            self.values.append(tuple(vals))
            self.task_workers.append(np.array(rows, dtype=np.int64))
            self.incidence.append(np.array(inc, dtype=bool).reshape(len(rows), len(vals)))
            num = task.num_false if task.num_false is not None else max(1, len(vals) - 1)
            self.num_false[j] = num
            if task.false_dist:
                self.collision[j] = sum(h * h for h in task.false_dist.values())
                self.log_h.append(np.log([task.false_dist.get(v, 1.0 / num) for v in vals]))
            else:
                self.collision[j] = 1.0 / num
                self.log_h.append(np.full(len(vals), -math.log(num)))

    def truth_flags(self, truth: Mapping) -> np.ndarray:
        """(n, m) bool: the worker's submission for the task contains ``truth[task]``."""
        flags = np.zeros((self.n, self.m), dtype=bool)
        for j, t in enumerate(self.task_ids):
            v = truth.get(t)
            if v is None:
                continue
            for i in self.task_workers[j]:
                flags[i, j] = v in self.workers[i].values[t]
        return flags


# ---------------------------------------------------------------------------
# serialization

def instance_from_dict(doc: Mapping[str, Any]) -> Instance:
    tasks = []
    for t in doc["tasks"]:
        tasks.append(TaskSpec(
            task_id=t["task_id"],
            theta=t.get("theta", 0.0),
            num_false=t.get("num_false"),
            false_dist=t.get("false_dist"),
        ))
    # JSON object keys are always strings; map them back onto the real ids
    by_str = {str(t.task_id): t.task_id for t in tasks}
    workers = []
    for w in doc["workers"]:
        values = {by_str.get(str(k), k): v for k, v in (w.get("values") or {}).items()}
        task_set = w.get("task_set")
        if task_set is None:
            task_set = list(values)
        workers.append(WorkerBid(
            worker_id=w["worker_id"],
            task_set=frozenset(task_set),
            bid_price=w.get("bid_price", 0.0),
            values=values,
            true_cost=w.get("true_cost"),
        ))
    gt = doc.get("ground_truth")
    if gt is not None:
        gt = {by_str.get(str(k), k): v for k, v in gt.items()}
    return Instance(tasks, workers, gt)


def instance_to_dict(inst: Instance) -> dict:
    tasks = []
    for t in inst.tasks:
        d: dict = {"task_id": t.task_id, "theta": t.theta}
        if t.num_false is not None:
            d["num_false"] = t.num_false
        if t.false_dist is not None:
            d["false_dist"] = dict(t.false_dist)
        tasks.append(d)
    workers = []
    for w in inst.workers:
        d = {
            "worker_id": w.worker_id,
            "task_set": sorted(w.task_set, key=id_key),
            "bid_price": w.bid_price,
            "values": {str(k): list(v) for k, v in w.values.items()},
        }
        if w.true_cost is not None:
            d["true_cost"] = w.true_cost
        workers.append(d)
    doc: dict = {"tasks": tasks, "workers": workers}
    if inst.ground_truth is not None:
        doc["ground_truth"] = {str(k): v for k, v in inst.ground_truth.items()}
    return doc


def load_instance(path) -> Instance:
    with open(path) as fh:
        return instance_from_dict(json.load(fh))


def save_instance(inst: Instance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(inst), fh, indent=2)


def export_observation_csv(inst: Instance, path, sep: str = "|") -> None:
    """Rows are workers, columns tasks; multiple values are joined by ``sep``."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh)
        out.writerow(["worker_id"] + [t.task_id for t in inst.tasks])
        for w in inst.workers:
            out.writerow([w.worker_id] + [sep.join(w.values.get(t.task_id, ())) for t in inst.tasks])


def make_instance(
    tasks: Iterable[TaskSpec],
    workers: Iterable[WorkerBid],
    ground_truth: Mapping | None = None,
) -> Instance:
    return Instance(tuple(tasks), tuple(workers), ground_truth)
