"""Synthetic crowds with copiers, metrics, truthfulness probes and sweeps."""
from __future__ import annotations

import csv
import io
import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from . import auction as ra
from .engine import run_date, run_ed, run_mv, run_nc
from .errors import IMC2Error
from .model import Instance, Params, TaskSpec, TruthEstimate, WorkerBid

logger = logging.getLogger(__name__)

TRUTH_ALGOS = ("DATE", "MV", "NC", "ED")
AUCTION_ALGOS = ("RA", "GA", "GB", "OPT")


@dataclass(frozen=True)
class GenConfig:
    """Knobs of the synthetic crowd.

    ``copier_fraction`` overrides ``copier_count`` when set.  Each worker
    performs each task with probability ``coverage``; ``workers_per_task``
    instead fixes the crowd size of every task.  ``cost_values`` (e.g. loaded
    with :func:`load_costs`) replaces the uniform cost range.
    """

    n: int = 120
    m: int = 300
    copier_count: int = 30
    copier_fraction: float | None = None
    accuracy_range: tuple = (0.5, 0.8)
    r_gen: float = 0.8
    num_false: int = 1
    theta_range: tuple = (2.0, 4.0)
    cost_range: tuple = (1.0, 10.0)
    cost_values: tuple | None = None
    coverage: float = 0.2
    workers_per_task: int | None = None
    copier_tasks: str = "source"
    theta_attempts: int = 100
    seed: int = 0

    @property
    def copiers(self) -> int:
        if self.copier_fraction is not None:
            return int(round(self.copier_fraction * self.n))
        return self.copier_count

    def validate(self) -> None:
        if self.n < 1 or self.m < 1:
            raise ValueError("n and m must be positive")
        if not 0 <= self.copiers < self.n:
            raise ValueError(f"copier count {self.copiers} must be in [0, n)")
        for name in ("accuracy_range", "theta_range", "cost_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is empty: {lo} > {hi}")
        lo, hi = self.accuracy_range
        if lo < 0 or hi > 1:
            raise ValueError("accuracy_range must lie in [0, 1]")
        if not 0 <= self.r_gen <= 1:
            raise ValueError("r_gen must be in [0, 1]")
        if self.num_false < 1:
            raise ValueError("num_false must be >= 1")
        if not 0 < self.coverage <= 1:
            raise ValueError("coverage must be in (0, 1]")
        if self.copier_tasks not in ("source", "own"):
            raise ValueError("copier_tasks must be 'source' or 'own'")
        if self.workers_per_task is not None and not 1 <= self.workers_per_task <= self.n:
            raise ValueError("workers_per_task must be in [1, n]")


@dataclass(frozen=True)
class GenInfo:
    copiers: tuple
    sources: Mapping[int, int]
    accuracy: tuple
    theta_resamples: int
    theta_clamped: int


def load_costs(path) -> tuple:
    """One price per line (blank lines and a non-numeric header are skipped)."""
    out = []
    with open(path) as fh:
        for line in fh:
            line = line.strip().split(",")[0]
            if not line:
                continue
            try:
                out.append(float(line))
            except ValueError:
                continue
    if not out:
        raise ValueError(f"no prices found in {path}")
    return tuple(out)


def _token(k: int) -> str:
    return f"v{k:02d}"


def generate(cfg: GenConfig) -> tuple[Instance, GenInfo]:
    """Draw an instance together with the generator's hidden state."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    n, m = cfg.n, cfg.m
    copiers = np.sort(rng.choice(n, size=cfg.copiers, replace=False))
    is_copier = np.zeros(n, dtype=bool)
    is_copier[copiers] = True
    independents = np.flatnonzero(~is_copier)
    acc = rng.uniform(*cfg.accuracy_range, size=n)

    if cfg.workers_per_task is not None:
        perform = np.zeros((n, m), dtype=bool)
        for j in range(m):
            perform[rng.choice(n, size=cfg.workers_per_task, replace=False), j] = True
    else:
        perform = rng.random((n, m)) < cfg.coverage
        for j in np.flatnonzero(~perform.any(0)):
            perform[rng.integers(n), j] = True

    sources = {int(c): int(rng.choice(independents)) for c in copiers}
    if cfg.copier_tasks == "source":
        for c, src in sources.items():
            perform[c] = perform[src]
        for j in np.flatnonzero(~perform.any(0)):
            perform[rng.choice(independents), j] = True
    truth_idx = rng.integers(cfg.num_false + 1, size=m)

    answers = np.full((n, m), -1, dtype=np.int64)

    def independent_answer(i, j):
        if rng.random() < acc[i]:
            return truth_idx[j]
        k = rng.integers(cfg.num_false)
        return k if k < truth_idx[j] else k + 1

    for i in independents:
        for j in np.flatnonzero(perform[i]):
            answers[i, j] = independent_answer(i, j)
    for c in copiers:
        src = sources[int(c)]
        for j in np.flatnonzero(perform[c]):
            if perform[src, j] and rng.random() < cfg.r_gen:
                answers[c, j] = answers[src, j]
            else:
                answers[c, j] = independent_answer(c, j)

    # expected accuracy mass available per task
    eff = np.where(perform, acc[:, None], 0.0)
    for c in copiers:
        src = sources[int(c)]
        both = perform[c] & perform[src]
        eff[c, both] = cfg.r_gen * acc[src] + (1 - cfg.r_gen) * acc[c]
    capacity = eff.sum(0)
    theta = np.empty(m)
    resamples = clamped = 0
    for j in range(m):
        for attempt in range(cfg.theta_attempts):
            theta[j] = rng.uniform(*cfg.theta_range)
            if theta[j] <= capacity[j]:
                break
            resamples += 1
        else:
            theta[j] = capacity[j]
            clamped += 1

    if cfg.cost_values is not None:
        costs = rng.choice(np.asarray(cfg.cost_values, dtype=float), size=n)
    else:
        costs = rng.uniform(*cfg.cost_range, size=n)

    tasks = [TaskSpec(j, float(theta[j]), cfg.num_false) for j in range(m)]
    workers = []
    for i in range(n):
        ts = np.flatnonzero(perform[i])
        workers.append(WorkerBid(
            worker_id=i,
            task_set=frozenset(int(j) for j in ts),
            bid_price=float(costs[i]),
            values={int(j): (_token(answers[i, j]),) for j in ts},
            true_cost=float(costs[i]),
        ))
    gt = {j: _token(truth_idx[j]) for j in range(m)}
    info = GenInfo(tuple(int(c) for c in copiers), sources, tuple(acc.tolist()), resamples, clamped)
    return Instance(tasks, workers, gt), info


def generate_instance(cfg: GenConfig) -> Instance:
    return generate(cfg)[0]


def precision(estimate: TruthEstimate | Mapping, ground_truth: Mapping) -> float:
    """Fraction of estimated tasks whose value equals the ground truth."""
    values = estimate.values if isinstance(estimate, TruthEstimate) else estimate
    if not values:
        return 0.0
    missing = [t for t in values if t not in ground_truth]
    if missing:
        raise KeyError(f"ground truth missing for tasks {missing[:5]!r}")
    return sum(values[t] == ground_truth[t] for t in values) / len(values)


# ---------------------------------------------------------------------------
# truthfulness probe

@dataclass(frozen=True)
class ProbeResult:
    worker_id: Any
    true_cost: float
    bids: tuple
    utilities: tuple
    won: tuple
    best_bid: float

    def to_csv(self) -> str:
        buf = io.StringIO()
        out = csv.writer(buf, lineterminator="\n")
        out.writerow(["bid", "utility", "won"])
        for b, u, w in zip(self.bids, self.utilities, self.won):
            out.writerow([repr(b), repr(u), int(w)])
        return buf.getvalue()


def truthfulness_probe(
    inst: Instance,
    accuracy,
    worker_id,
    grid: Sequence[float] | None = None,
    theta: Mapping | None = None,
) -> ProbeResult:
    """Utility of one worker as its bid moves over ``grid`` times its true cost.

    Every other bid stays fixed.  The truthful bid (multiplier 1) is always
    evaluated; ``best_bid`` is the first bid reaching the maximum utility.
    """
    if grid is None:
        grid = np.linspace(0.5, 1.5, 21)
    cost = inst.worker(worker_id).cost
    mults = sorted(set(float(g) for g in grid) | {1.0})
    bids, utils, won = [], [], []
    for k in mults:
        bid = cost * k
        out = ra.run_reverse_auction(inst.with_bid(worker_id, bid), accuracy, theta)
        win = worker_id in out.winners
        bids.append(bid)
        won.append(win)
        utils.append(out.payments[worker_id] - cost if win else 0.0)
    best = int(np.argmax(utils))
    return ProbeResult(worker_id, cost, tuple(bids), tuple(utils), tuple(won), bids[best])


# ---------------------------------------------------------------------------
# experiments

@dataclass(frozen=True)
class MetricsRow:
    algorithm: str
    seed: int
    cell: int
    config: Mapping = field(default_factory=dict)
    precision: float | None = None
    social_cost: float | None = None
    total_payment: float | None = None
    runtime_ms: float | None = None
    iterations: int | None = None
    error: str | None = None


@dataclass(frozen=True)
class SweepSpec:
    """``vary`` maps GenConfig field names to the values to sweep (cartesian product)."""

    algorithms: tuple = ("DATE", "MV")
    base: Mapping = field(default_factory=dict)
    vary: Mapping = field(default_factory=dict)
    params: Mapping = field(default_factory=dict)
    seeds: int = 10
    seed0: int = 0

    @classmethod
    def from_dict(cls, doc: Mapping) -> "SweepSpec":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(doc) - known
        if extra:
            raise ValueError(f"unknown sweep keys {sorted(extra)}")
        doc = dict(doc)
        if "algorithms" in doc:
            doc["algorithms"] = tuple(a.upper() for a in doc["algorithms"])
        return cls(**doc)

    def cells(self) -> list[dict]:
        keys = list(self.vary)
        return [dict(zip(keys, combo)) for combo in itertools.product(*(self.vary[k] for k in keys))]


def _config(base: Mapping, cell: Mapping, seed: int) -> GenConfig:
    kw = dict(base)
    kw.update(cell)
    for k in ("accuracy_range", "theta_range", "cost_range", "cost_values"):
        if kw.get(k) is not None:
            kw[k] = tuple(kw[k])
    kw["seed"] = seed
    return GenConfig(**kw)


def _timed(fn):
    t0 = time.perf_counter()
    out = fn()
    return out, max((time.perf_counter() - t0) * 1e3, 1e-6)


def run_replication(spec: SweepSpec, cell_idx: int, cell: Mapping, seed: int) -> list[MetricsRow]:
    """All requested algorithms on one generated instance."""
    inst = generate_instance(_config(spec.base, cell, seed))
    params = Params(**spec.params)
    public = inst.public()
    gt = inst.ground_truth
    rows = []
    date_res = None

    def row(alg, **kw):
        rows.append(MetricsRow(alg, seed, cell_idx, dict(cell), **kw))

    for alg in spec.algorithms:
        try:
            if alg == "MV":
                est, ms = _timed(lambda: run_mv(public, params.similarity, params.rho))
                row(alg, precision=precision(est, gt), runtime_ms=ms, iterations=0)
            elif alg in ("DATE", "NC", "ED"):
                fn = {"DATE": run_date, "NC": run_nc, "ED": run_ed}[alg]
                res, ms = _timed(lambda: fn(public, params))
                if alg == "DATE":
                    date_res = res
                row(alg, precision=precision(res.truth, gt), runtime_ms=ms, iterations=res.iterations)
            elif alg in AUCTION_ALGOS:
                if date_res is None:
                    date_res = run_date(public, params)
                acc = date_res.accuracy
                if alg == "RA":
                    out, ms = _timed(lambda: ra.run_reverse_auction(inst, acc))
                    row(alg, social_cost=out.social_cost, total_payment=out.total_payment, runtime_ms=ms)
                elif alg == "OPT":
                    (cost, _), ms = _timed(lambda: ra.brute_force_opt(inst, acc))
                    row(alg, social_cost=cost, runtime_ms=ms)
                else:
                    fn = ra.run_ga if alg == "GA" else ra.run_gb
                    winners, ms = _timed(lambda: fn(inst, acc))
                    row(alg, social_cost=ra.social_cost(inst, winners), runtime_ms=ms)
            else:
                raise ValueError(f"unknown algorithm {alg!r}")
        except IMC2Error as exc:
            logger.info("cell %d seed %d %s failed: %s", cell_idx, seed, alg, exc)
            row(alg, error=f"{type(exc).__name__}: {exc}")
    return rows


def run_experiment(spec: SweepSpec | Mapping, max_workers: int = 1) -> list[MetricsRow]:
    """Run every cell of the sweep over ``spec.seeds`` replications.

    Replications are independent; with ``max_workers > 1`` they run in a
    process pool.  Output order is (cell, seed, algorithm) either way.
    """
    if not isinstance(spec, SweepSpec):
        spec = SweepSpec.from_dict(spec)
    jobs = [(ci, cell, spec.seed0 + s) for ci, cell in enumerate(spec.cells()) for s in range(spec.seeds)]
    if max_workers > 1:
        with ProcessPoolExecutor(max_workers) as pool:
            results = list(pool.map(run_replication, *zip(*[(spec, *j) for j in jobs])))
    else:
        results = [run_replication(spec, *j) for j in jobs]
    return [r for rep in results for r in rep]


METRICS = ("precision", "social_cost", "total_payment", "runtime_ms", "iterations")


def aggregate(rows: Iterable[MetricsRow]) -> list[dict]:
    """Mean and (population) standard deviation per (cell, algorithm)."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.cell, r.algorithm), []).append(r)
    out = []
    for (cell, alg), rs in groups.items():
        rec = {"cell": cell, "algorithm": alg, **rs[0].config, "runs": len(rs),
               "errors": sum(r.error is not None for r in rs)}
        for metric in METRICS:
            vals = [getattr(r, metric) for r in rs if getattr(r, metric) is not None]
            rec[f"{metric}_mean"] = float(np.mean(vals)) if vals else None
            rec[f"{metric}_std"] = float(np.std(vals)) if vals else None
        out.append(rec)
    return out


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def rows_to_csv(rows: Sequence[MetricsRow], timing: bool = False) -> str:
    """CSV text of the per-replication rows.

    Wall-clock columns are left out unless ``timing`` is set so that the same
    sweep always produces identical bytes.
    """
    keys = sorted({k for r in rows for k in r.config})
    cols = ["cell", "algorithm", "seed", *keys, "precision", "social_cost", "total_payment", "iterations", "error"]
    if timing:
        cols.insert(cols.index("iterations"), "runtime_ms")
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(cols)
    for r in rows:
        d = asdict(r)
        d.update(r.config)
        out.writerow([_fmt(d.get(c)) for c in cols])
    return buf.getvalue()


def rows_from_csv(text: str) -> list[MetricsRow]:
    reader = csv.DictReader(io.StringIO(text))
    fixed = {"cell", "algorithm", "seed", "precision", "social_cost", "total_payment",
             "runtime_ms", "iterations", "error"}
    out = []
    for rec in reader:
        def num(k, cast=float):
            v = rec.get(k, "")
            return cast(v) if v not in ("", None) else None
        config = {k: _parse(v) for k, v in rec.items() if k not in fixed}
        out.append(MetricsRow(
            algorithm=rec["algorithm"], seed=int(rec["seed"]), cell=int(rec["cell"]), config=config,
            precision=num("precision"), social_cost=num("social_cost"),
            total_payment=num("total_payment"), runtime_ms=num("runtime_ms"),
            iterations=num("iterations", int), error=rec.get("error") or None,
        ))
    return out


def _parse(v: str):
    for cast in (int, float):
        try:
            return cast(v)
        except ValueError:
            pass
    return v


def summary_to_csv(summary: Sequence[dict]) -> str:
    cols: list = []
    for rec in summary:
        cols.extend(k for k in rec if k not in cols)
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(cols)
    for rec in summary:
        out.writerow([_fmt(rec.get(c)) for c in cols])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# fixtures

TABLE1 = {
    "Stonebraker": ("MIT", "Berkeley", "MIT", "MIT", "MS"),
    "Dewitt": ("MSR", "MSR", "UWise", "UWisc", "UWisc"),
    "Bernstein": ("MSR", "MSR", "MSR", "MSR", "MSR"),
    "Carey": ("UCI", "AT&T", "BEA", "BEA", "BEA"),
    "Halevy": ("Google", "Google", "UW", "UW", "UW"),
}
TABLE1_BIDS = (3.0, 2.0, 4.0, 5.0, 1.0)


def table1_instance(theta: float = 1.0) -> Instance:
    """Five workers reporting five researchers' affiliations; worker 1 is always right.

    Workers 4 and 5 copy from worker 3.  Bids are illustrative and equal the
    true costs.
    """
    tasks = [TaskSpec(t, theta) for t in TABLE1]
    workers = [
        WorkerBid(i + 1, frozenset(TABLE1), TABLE1_BIDS[i], {t: vals[i] for t, vals in TABLE1.items()}, TABLE1_BIDS[i])
        for i in range(5)
    ]
    return Instance(tasks, workers, {t: vals[0] for t, vals in TABLE1.items()})
