"""Command line entry point (``imc2``).

Exit status: 0 on success, 2 for invalid input, 3 when coverage is
infeasible, 4 when a brute-force oracle would be too large.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import auction as ra
from .engine import run_date, run_ed, run_mv, run_nc
from .errors import (
    EnumerationTooLarge,
    InfeasibleCoverage,
    InsufficientCompetition,
    OracleTooLarge,
    ValidationError,
)
from .harness import SweepSpec, aggregate, rows_to_csv, run_experiment, summary_to_csv, table1_instance, truthfulness_probe
from .model import AccuracyMatrix, Params, instance_from_dict, instance_to_dict, load_instance, require_valid

EXIT_OK, EXIT_VALIDATION, EXIT_INFEASIBLE, EXIT_ORACLE = 0, 2, 3, 4


def _load(path):
    try:
        inst = load_instance(path)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise ValidationError(f"cannot read instance {path}: {exc}") from exc
    require_valid(inst)
    return inst


def _load_accuracy(path, inst) -> AccuracyMatrix:
    """Accepts the ``accuracy`` object written by ``discover`` (worker -> task -> value)."""
    with open(path) as fh:
        doc = json.load(fh)
    doc = doc.get("accuracy", doc)
    workers = {str(w.worker_id): w for w in inst.workers}
    entries = {}
    for w_key, row in doc.items():
        w = workers.get(w_key)
        if w is None:
            raise ValidationError(f"accuracy file names unknown worker {w_key!r}")
        tasks = {str(t): t for t in w.task_set}
        for t_key, a in row.items():
            if t_key not in tasks:
                raise ValidationError(f"accuracy for worker {w_key} on task {t_key!r} outside its task set")
            entries[(w.worker_id, tasks[t_key])] = float(a)
    return AccuracyMatrix(entries)


def _emit(doc, out):
    text = json.dumps(doc, indent=2, default=str)
    if out:
        with open(out, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_discover(args) -> int:
    inst = _load(args.instance)
    if args.algo == "mv":
        est = run_mv(inst, args.sim, args.rho)
        _emit({"truth": {str(k): v for k, v in est.values.items()}}, args.out)
        return EXIT_OK
    params = Params(alpha=args.alpha, init_accuracy=args.eps, copy_prob=args.r,
                    max_iters=args.phi, rho=args.rho, similarity=args.sim)
    fn = {"date": run_date, "nc": run_nc, "ed": run_ed}[args.algo]
    res = fn(inst, params)
    _emit({
        "truth": {str(k): v for k, v in res.truth.values.items()},
        "accuracy": res.accuracy.to_json(),
        "iterations": res.iterations,
        "converged": res.converged,
    }, args.out)
    return EXIT_OK


def cmd_auction(args) -> int:
    inst = _load(args.instance)
    acc = _load_accuracy(args.accuracy, inst)
    if args.algo == "ra":
        out = ra.run_reverse_auction(inst, acc)
        _emit(out.to_json(ra.bound_constants(inst, acc)), args.out)
    elif args.algo == "opt":
        cost, winners = ra.brute_force_opt(inst, acc)
        _emit({"winners": list(winners), "social_cost": cost}, args.out)
    else:
        winners = (ra.run_ga if args.algo == "ga" else ra.run_gb)(inst, acc)
        _emit({"winners": list(winners), "social_cost": ra.social_cost(inst, winners)}, args.out)
    return EXIT_OK


def cmd_probe(args) -> int:
    inst = _load(args.instance)
    acc = _load_accuracy(args.accuracy, inst)
    ids = {str(w.worker_id): w.worker_id for w in inst.workers}
    if args.worker not in ids:
        raise ValidationError(f"unknown worker {args.worker!r}")
    lo, hi, k = args.grid
    res = truthfulness_probe(inst, acc, ids[args.worker], np.linspace(lo, hi, int(k)))
    text = res.to_csv()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        with open(args.spec) as fh:
            doc = json.load(fh)
        if args.seeds is not None:
            doc["seeds"] = args.seeds
        spec = SweepSpec.from_dict(doc)
        rows = run_experiment(spec, max_workers=args.jobs)
    except (OSError, ValueError, TypeError) as exc:
        raise ValidationError(str(exc)) from exc
    text = rows_to_csv(rows, timing=args.timing)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
        if args.summary:
            with open(args.summary, "w") as fh:
                fh.write(summary_to_csv(aggregate(rows)))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_fixture(args) -> int:
    _emit(instance_to_dict(table1_instance()), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="imc2", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("discover", help="estimate truths and accuracies for an instance")
    d.add_argument("instance")
    d.add_argument("--algo", choices=["date", "mv", "nc", "ed"], default="date")
    d.add_argument("--alpha", type=float, default=0.2)
    d.add_argument("--eps", type=float, default=0.5, help="initial accuracy")
    d.add_argument("--r", type=float, default=0.4, help="copy probability")
    d.add_argument("--phi", type=int, default=100, help="maximum iterations")
    d.add_argument("--rho", type=float, default=0.0)
    d.add_argument("--sim", choices=["exact", "edit"], default="exact")
    d.add_argument("--out")
    d.set_defaults(func=cmd_discover)

    a = sub.add_parser("auction", help="select winners and payments")
    a.add_argument("instance")
    a.add_argument("accuracy", help="JSON written by 'discover'")
    a.add_argument("--algo", choices=["ra", "ga", "gb", "opt"], default="ra")
    a.add_argument("--out")
    a.set_defaults(func=cmd_auction)

    pr = sub.add_parser("probe", help="utility curve of one worker over deviated bids")
    pr.add_argument("instance")
    pr.add_argument("accuracy")
    pr.add_argument("--worker", required=True)
    pr.add_argument("--grid", type=float, nargs=3, metavar=("LO", "HI", "POINTS"), default=(0.5, 1.5, 21))
    pr.add_argument("--out")
    pr.set_defaults(func=cmd_probe)

    s = sub.add_parser("simulate", help="run a sweep spec and write per-run metrics")
    s.add_argument("spec", help="JSON sweep spec")
    s.add_argument("--seeds", type=int)
    s.add_argument("--out")
    s.add_argument("--summary", help="also write mean/std per cell (requires --out)")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--timing", action="store_true", help="include wall-clock columns")
    s.set_defaults(func=cmd_simulate)

    f = sub.add_parser("fixture", help="emit a built-in instance")
    f.add_argument("name", choices=["table1"])
    f.add_argument("--out")
    f.set_defaults(func=cmd_fixture)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("IMC2_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InfeasibleCoverage, InsufficientCompetition) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OracleTooLarge, EnumerationTooLarge) as exc:
        print(f"too large: {exc}", file=sys.stderr)
        return EXIT_ORACLE


if __name__ == "__main__":
    sys.exit(main())
