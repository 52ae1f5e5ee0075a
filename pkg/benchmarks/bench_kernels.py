"""Compare the compiled and pure-Python kernels on the three hot paths.

    python3 benchmarks/bench_kernels.py [--repeat 3] [--out results.csv]

Each row times one workload per backend (best of ``--repeat``) and checks
that both backends return the same answers.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time

from moldsched import kernels
from moldsched.instances import GeneratorConfig, generate
from moldsched.oracles import OracleBudget, exact_min_L
from moldsched.scheduler import FIFO, PriorityPolicy, brute_force_makespan, list_schedule

BIG = OracleBudget(max_decisions=10**8, max_schedule_space=10**10)


def workloads():
    sched = [generate(GeneratorConfig("random-dag", n=60, d=3, seed=s, max_alts=3)) for s in range(20)]
    decisions = [[j.profile.alternatives[-1][0] for j in inst.jobs] for inst in sched]
    lmin = [generate(GeneratorConfig("random-dag", n=12, d=2, seed=100 + s, max_alts=4)) for s in range(10)]
    opt = [generate(GeneratorConfig("random-dag", n=6, d=2, seed=200 + s, max_alts=3)) for s in range(10)]

    def run_schedule(backend):
        out = []
        for inst, dec in zip(sched, decisions):
            out.append(list_schedule(inst, dec, FIFO, backend).makespan)
            out.append(list_schedule(inst, dec, PriorityPolicy("critical-path"), backend).makespan)
        return out

    def run_lmin(backend):
        return [exact_min_L(i, BIG, backend=backend, use_cache=False).L_min for i in lmin]

    def run_opt(backend):
        return [brute_force_makespan(i, BIG, backend=backend).T_opt for i in opt]

    return [
        ("list_schedule", "20 DAGs, n=60, d=3, two policies", run_schedule),
        ("min_lower_bound", "10 DAGs, n=12, d=2", run_lmin),
        ("optimal_makespan", "10 DAGs, n=6, d=2", run_opt),
    ]


def best_of(fn, backend, repeat):
    best, result = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn(backend)
        best = min(best, time.perf_counter() - t0)
    return best, result


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--out", help="CSV file (default: stdout)")
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled kernels are not built; only the python backend is timed", file=sys.stderr)
    rows = []
    for name, desc, fn in workloads():
        times, results = {}, {}
        for b in backends:
            times[b], results[b] = best_of(fn, b, args.repeat)
        agree = len({tuple(r) for r in results.values()}) == 1
        row = {"kernel": name, "workload": desc, "python_s": f"{times['python']:.4f}"}
        if "cython" in times:
            row["cython_s"] = f"{times['cython']:.4f}"
            row["speedup"] = f"{times['python'] / times['cython']:.1f}"
        row["agree"] = agree
        rows.append(row)
        if not agree:
            print(f"{name}: backends disagree", file=sys.stderr)

    fields = ["kernel", "workload", "python_s", "cython_s", "speedup", "agree"]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.DictWriter(fh, fieldnames=fields, restval="")
        w.writeheader()
        w.writerows(rows)
    finally:
        if args.out:
            fh.close()
    return 0 if all(r["agree"] for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
