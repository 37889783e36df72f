import numpy as np
import pytest

from imc2.model import AccuracyMatrix, Instance, TaskSpec, WorkerBid


def build(rows, theta=1.0, num_false=None, bids=None, k=None):
    """Instance from {task: [value of worker 1, value of worker 2, ...]}; None means no answer."""
    tasks = [TaskSpec(t, theta, num_false) for t in rows]
    if k is None:
        k = len(next(iter(rows.values())))
    workers = []
    for i in range(k):
        vals = {t: v[i] for t, v in rows.items() if v[i] is not None}
        bid = bids[i] if bids else 1.0
        workers.append(WorkerBid(i + 1, frozenset(vals), bid, vals, bid))
    return Instance(tasks, workers)


@pytest.fixture
def three_worker_market():
    """One task, coverage 1.0; worker accuracies .6/.5/.5 and bids 3/2/4."""
    tasks = [TaskSpec("t", 1.0)]
    workers = [
        WorkerBid(1, {"t"}, 3.0, {"t": "a"}, 3.0),
        WorkerBid(2, {"t"}, 2.0, {"t": "a"}, 2.0),
        WorkerBid(3, {"t"}, 4.0, {"t": "b"}, 4.0),
    ]
    inst = Instance(tasks, workers)
    acc = AccuracyMatrix({(1, "t"): 0.6, (2, "t"): 0.5, (3, "t"): 0.5})
    return inst, acc


def random_market(rng, n, m, theta_hi=1.5, p_task=0.6):
    """Random feasible-by-construction auction input (accuracies as a dict)."""
    while True:
        perform = rng.random((n, m)) < p_task
        acc_arr = np.where(perform, rng.uniform(0.05, 1.0, (n, m)), 0.0)
        cap = acc_arr.sum(0)
        if (cap > 0).all():
            break
    theta = rng.uniform(0.05, 1.0, m) * np.minimum(cap, theta_hi)
    tasks = [TaskSpec(j, float(theta[j])) for j in range(m)]
    workers = []
    for i in range(n):
        ts = frozenset(int(j) for j in np.flatnonzero(perform[i]))
        bid = float(rng.uniform(1.0, 10.0))
        workers.append(WorkerBid(i, ts, bid, {}, bid))
    acc = {(i, j): float(acc_arr[i, j]) for i in range(n) for j in range(m) if perform[i, j]}
    return Instance(tasks, workers), acc


_CRITERIA: dict = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: criterion(k, passed, detail)."""
    def record(k, passed, detail):
        _CRITERIA[k] = (bool(passed), detail)
        print(f"criterion {k}: {'PASS' if passed else 'FAIL'} {detail}")
    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(_CRITERIA):
        passed, detail = _CRITERIA[k]
        terminalreporter.write_line(f"criterion {k:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
