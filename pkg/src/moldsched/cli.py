"""``moldsched`` command line.

Exit codes: 0 success, 1 a validity/bound violation or a strict-mode
refusal, 2 invalid input (unreadable file, bad flags, unusable method).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from pathlib import Path

from . import instances
from .alloc_general import (
    adjust_allocation,
    estimated_ratio,
    large_d_ratio,
    select_parameters,
    theorem1_ratio,
)
from .core import ModelError, Schedule, aggregate_metrics, format_fraction, validate_schedule
from .oracles import OracleRefusal
from .pipeline import METHODS, MethodError, RunOptions, allocate, graph_class, run_instance, choose_method
from .scheduler import POLICIES, PriorityPolicy, interval_report, list_schedule

log = logging.getLogger("moldsched")

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, ensure_ascii=False) + "\n"


def _policy(args, obj) -> PriorityPolicy:
    if args.policy != "explicit-order":
        if args.order:
            raise InputError("--order only applies to --policy explicit-order")
        return PriorityPolicy(args.policy)
    if not args.order:
        raise InputError("--policy explicit-order needs --order")
    if args.order in ("optimal", "adversarial"):
        if not isinstance(obj, instances.LowerBoundBundle):
            raise InputError(f"--order {args.order} needs a file with priority orders")
        order = obj.optimal_priority if args.order == "optimal" else obj.adversarial_priority
    elif Path(args.order).exists():
        order = json.loads(Path(args.order).read_text(encoding="utf-8"))
    else:
        order = args.order.split(",")
    return PriorityPolicy.explicit(order)


def _options(args, obj=None) -> RunOptions:
    return RunOptions(
        method=args.method,
        policy=_policy(args, obj),
        mu=args.mu,
        rho=args.rho,
        epsilon=args.epsilon,
        strict=getattr(args, "strict", False),
        oracle=not getattr(args, "no_oracle", False),
        makespan_oracle=getattr(args, "makespan_oracle", False),
        seed=getattr(args, "seed", None),
        timing=getattr(args, "timing", False),
    )


# -- subcommands -------------------------------------------------------------


def cmd_generate(args) -> int:
    count = args.count
    if count > 1 and not args.out:
        raise InputError("--count > 1 needs --out DIR")
    for k in range(count):
        cfg = instances.GeneratorConfig(
            kind=args.kind, n=args.n, d=args.d, cap_min=args.cap_min, cap_max=args.cap_max,
            max_alts=args.max_alts, seed=args.seed + k, M=args.M, edge_density=args.density,
        )
        text = instances.dumps(instances.generate(cfg))
        if count > 1:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"{args.kind}-d{args.d}-s{cfg.seed}.json").write_text(text, encoding="utf-8")
        else:
            _emit(text, args.out)
    return EXIT_OK


def _allocation_json(inst, method, params, initial, adj) -> dict:
    m0 = aggregate_metrics(inst, initial)
    m1 = aggregate_metrics(inst, adj.decision)
    return {
        "method": method,
        "mu": format_fraction(params.mu),
        "rho": format_fraction(params.rho),
        "initial": {j: list(a) for j, a in zip(inst.ids, initial)},
        "final": {j: list(a) for j, a in zip(inst.ids, adj.decision)},
        "adjusted": [j for j, f in zip(inst.ids, adj.adjusted) if f],
        "fallback": [j for j, f in zip(inst.ids, adj.fallback) if f],
        "initial_metrics": {"C": format_fraction(m0.C), "A": format_fraction(m0.A), "L": format_fraction(m0.L)},
        "final_metrics": {"C": format_fraction(m1.C), "A": format_fraction(m1.A), "L": format_fraction(m1.L)},
    }


def cmd_allocate(args) -> int:
    inst = instances.load(args.instance)
    method, params, _ = choose_method(inst, _options(args), graph_class(inst))
    initial = allocate(inst, method, params)["initial"]
    adj = adjust_allocation(inst, initial, params.mu)
    _emit(_dump(_allocation_json(inst, method, params, initial, adj)), args.out)
    return EXIT_OK


def _read_allocation(inst, path) -> list[tuple[int, ...]]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    table = data.get("final", data) if isinstance(data, dict) else None
    if not isinstance(table, dict) or set(table) != set(inst.ids):
        raise InputError("allocation file must map every job id to a vector (or carry a 'final' map)")
    return [tuple(int(x) for x in table[j]) for j in inst.ids]


def cmd_schedule(args) -> int:
    obj = instances.load_any(args.instance)
    inst = obj.instance if isinstance(obj, instances.LowerBoundBundle) else obj
    policy = _policy(args, obj)
    if args.allocation:
        decision = _read_allocation(inst, args.allocation)
        mu = args.mu
    else:
        method, params, _ = choose_method(inst, _options(args, obj), graph_class(inst))
        initial = allocate(inst, method, params)["initial"]
        decision = adjust_allocation(inst, initial, params.mu).decision
        mu = params.mu
    try:
        sched = list_schedule(inst, decision, policy)
    except ModelError as exc:
        raise InputError(str(exc)) from None
    out = sched.to_json(inst)
    if args.intervals:
        if mu is None:
            raise InputError("--intervals with --allocation needs --mu")
        out["intervals"] = interval_report(inst, sched, mu).to_json()
    _emit(_dump(out), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    inst = instances.load(args.instance)
    data = json.loads(Path(args.schedule).read_text(encoding="utf-8"))
    try:
        starts = [Fraction(data["start_times"][j]) for j in inst.ids]
        allocs = [tuple(int(x) for x in data["allocations"][j]) for j in inst.ids]
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"malformed schedule: missing or bad entry {exc}") from None
    # unknown allocations get a zero duration here and are reported by the validator
    durs = [inst.jobs[k].profile.table.get(a, Fraction(0)) for k, a in enumerate(allocs)]
    sched = Schedule(tuple(allocs), tuple(starts), tuple(durs))
    viol = validate_schedule(inst, sched)
    out = {
        "valid": not viol,
        "makespan": format_fraction(sched.makespan),
        "violations": [
            {"kind": v.kind, "jobs": list(v.jobs), "time": None if v.time is None else format_fraction(v.time),
             "type": v.type_index, "detail": v.detail}
            for v in viol
        ],
    }
    if "makespan" in data and Fraction(data["makespan"]) != sched.makespan:
        out["valid"] = False
        out["violations"].append({"kind": "makespan", "jobs": [], "time": None, "type": None,
                                  "detail": f"stated makespan {data['makespan']} differs from {sched.makespan}"})
    if args.mu is not None and not viol:
        out["intervals"] = interval_report(inst, sched, args.mu).to_json()
    _emit(_dump(out), args.out)
    return EXIT_OK if out["valid"] else EXIT_VIOLATION


def _run_one(job: tuple[str, dict]) -> tuple[int, dict, dict | None]:
    path, flags = job
    args = argparse.Namespace(**flags)
    try:
        obj = instances.load_any(path)
        inst = obj.instance if isinstance(obj, instances.LowerBoundBundle) else obj
        rep = run_instance(inst, _options(args, obj), instance_id=Path(path).stem)
    except (ModelError, MethodError, InputError, OracleRefusal, OSError, instances.ConfigError) as exc:
        return EXIT_INPUT, {"instance_id": Path(path).stem, "error": str(exc)}, None
    sched = rep.schedule.to_json(inst) if rep.schedule is not None else None
    return rep.exit_code, rep.to_json(), sched


CSV_COLUMNS = ("instance_id", "n", "d", "graph_class", "method", "policy", "mu", "mu_decimal", "rho",
               "rho_decimal", "L_bar", "L_min", "C_initial", "A_initial", "T", "lower_bound_kind", "ratio",
               "guaranteed_ratio", "ok", "seed", "failed_checks")


def _csv(reports: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in reports:
        row = dict(r)
        row["failed_checks"] = ";".join(c["name"] for c in r.get("checks", []) if c["applicable"] and not c["ok"])
        w.writerow(row)
    return buf.getvalue()


def cmd_run(args) -> int:
    flags = {k: getattr(args, k) for k in ("method", "policy", "order", "mu", "rho", "epsilon", "strict",
                                           "no_oracle", "makespan_oracle", "seed", "timing")}
    jobs = [(p, flags) for p in args.instances]
    if args.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]
    reports = [r for _, r, _ in results]
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        for (_, rep, sched), (path, _) in zip(results, jobs):
            stem = Path(path).stem
            (out / f"{stem}.report.json").write_text(_dump(rep), encoding="utf-8")
            if sched is not None:
                (out / f"{stem}.schedule.json").write_text(_dump(sched), encoding="utf-8")
        (out / "summary.csv").write_text(_csv([r for r in reports if "error" not in r]), encoding="utf-8")
    elif args.format == "csv":
        sys.stdout.write(_csv([r for r in reports if "error" not in r]))
    else:
        sys.stdout.write(_dump(reports[0] if len(reports) == 1 else reports))
    for _, rep, _ in results:
        if "error" in rep:
            log.error("%s: %s", rep["instance_id"], rep["error"])
        elif not rep["ok"]:
            failed = [c["name"] for c in rep["checks"] if c["applicable"] and not c["ok"]]
            log.error("%s: %s", rep["instance_id"], rep["refusal"] or f"failed checks {failed}")
    return max(code for code, _, _ in results)


BENCH_COLUMNS = ("d", "branch", "mu", "mu_decimal", "rho", "rho_decimal", "theorem1_ratio", "actual_ratio",
                 "estimated_ratio", "required_pmin")


def bench_ratios(d_min: int, d_max: int) -> list[dict]:
    """General-DAG ratio per ``d``: the golden-ratio branch, and for d >= 22
    the quartic-root branch with its cube-root estimate."""
    if not 1 <= d_min <= d_max:
        raise InputError("need 1 <= d-min <= d-max")
    rows = []
    for d in range(d_min, d_max + 1):
        p = select_parameters(d, "general")
        big = d >= 22
        rows.append({
            "d": d,
            "branch": "quartic" if big else "golden",
            "mu": format_fraction(p.mu),
            "mu_decimal": f"{float(p.mu):.12f}",
            "rho": format_fraction(p.rho),
            "rho_decimal": f"{float(p.rho):.12f}",
            "theorem1_ratio": f"{theorem1_ratio(d):.12f}",
            "actual_ratio": f"{(large_d_ratio(d, float(p.mu)) if big else theorem1_ratio(d)):.12f}",
            "estimated_ratio": f"{estimated_ratio(d):.12f}" if big else "",
            "required_pmin": p.required_pmin,
        })
    return rows


def cmd_bench(args) -> int:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=BENCH_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(bench_ratios(args.d_min, args.d_max))
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# -- argument parsing --------------------------------------------------------


def _add_alloc_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--method", choices=METHODS, default="auto")
    p.add_argument("--mu", type=_fraction, help="override the cap parameter (rational, e.g. 2/5)")
    p.add_argument("--rho", type=_fraction, help="override the rounding threshold")
    p.add_argument("--epsilon", type=_fraction, default=Fraction(1, 10), help="FPTAS accuracy (default 1/10)")


def _add_policy_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--policy", choices=POLICIES, default="fifo")
    p.add_argument("--order", help="explicit order: 'optimal' / 'adversarial' (bundle files), a JSON file "
                                   "or comma-separated ids")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="moldsched", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a generated instance as JSON")
    g.add_argument("--kind", choices=instances.KINDS, required=True)
    g.add_argument("--n", type=int, default=6)
    g.add_argument("--d", type=int, default=2)
    g.add_argument("--cap-min", type=int, default=7)
    g.add_argument("--cap-max", type=int, default=12)
    g.add_argument("--max-alts", type=int, default=4)
    g.add_argument("--density", type=float, default=0.35)
    g.add_argument("--M", type=int)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--count", type=int, default=1, help="emit this many instances with consecutive seeds")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("allocate", help="compute initial and capped allocations")
    a.add_argument("instance")
    _add_alloc_flags(a)
    a.add_argument("--out")
    a.set_defaults(func=cmd_allocate, policy="fifo", order=None)

    s = sub.add_parser("schedule", help="list-schedule an instance")
    s.add_argument("instance")
    s.add_argument("--allocation", help="allocation JSON (output of 'allocate' or {id: vector})")
    _add_alloc_flags(s)
    _add_policy_flags(s)
    s.add_argument("--intervals", action="store_true", help="include the interval classification")
    s.add_argument("--out")
    s.set_defaults(func=cmd_schedule)

    v = sub.add_parser("verify", help="check a schedule file against an instance")
    v.add_argument("instance")
    v.add_argument("schedule")
    v.add_argument("--mu", type=_fraction, help="also classify intervals with this mu")
    v.add_argument("--out")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("run", help="end-to-end pipeline with bound checks")
    r.add_argument("instances", nargs="+")
    _add_alloc_flags(r)
    _add_policy_flags(r)
    r.add_argument("--strict", action="store_true", help="refuse when capacities are below the guarantee's minimum")
    r.add_argument("--no-oracle", action="store_true", help="skip the exact lower-bound oracle")
    r.add_argument("--makespan-oracle", action="store_true", help="also compute the optimal makespan")
    r.add_argument("--seed", type=int, help="recorded in the report")
    r.add_argument("--timing", action="store_true", help="add wall time (reports are then not byte-stable)")
    r.add_argument("--workers", type=int, default=1)
    r.add_argument("--format", choices=("json", "csv"), default="json")
    r.add_argument("--out", help="directory for reports, schedules and summary.csv")
    r.set_defaults(func=cmd_run)

    b = sub.add_parser("bench", help="CSV of guaranteed ratios per d")
    b.add_argument("--d-min", type=int, default=1)
    b.add_argument("--d-max", type=int, default=50)
    b.add_argument("--out")
    b.set_defaults(func=cmd_bench)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (InputError, ModelError, MethodError, OracleRefusal, instances.ConfigError, OSError,
            json.JSONDecodeError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
