"""Multi-resource list scheduling and the analysis of its schedules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from . import kernels
from .core import (
    Alloc,
    Instance,
    Schedule,
    ValidationError,
    aggregate_metrics,
    check_decision,
    format_fraction,
)
from .oracles import OracleBudget, OracleRefusal, job_options

POLICIES = ("fifo", "longest-time", "critical-path", "explicit-order")


@dataclass(frozen=True)
class PriorityPolicy:
    """How the ready queue is ordered.

    ``fifo`` keeps insertion order (jobs becoming ready at the same event
    enter by instance index); ``longest-time`` and ``critical-path`` use the
    job's own time and its longest remaining path under the fixed
    allocation; ``explicit-order`` takes a total order of job ids.
    """

    kind: str = "fifo"
    order: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.kind not in POLICIES:
            raise ValueError(f"unknown policy {self.kind!r}; expected one of {POLICIES}")
        if (self.kind == "explicit-order") != (self.order is not None):
            raise ValueError("explicit-order needs an order, other policies take none")

    @classmethod
    def explicit(cls, order: Sequence[str]) -> "PriorityPolicy":
        return cls("explicit-order", tuple(order))

    def ranks(self, instance: Instance, times: Sequence[int]) -> list[int] | None:
        n = instance.n
        if self.kind == "fifo":
            return None
        if self.kind == "longest-time":
            keyed = sorted(range(n), key=lambda k: (-times[k], k))
        elif self.kind == "critical-path":
            level = [0] * n
            for k in reversed(instance.topo_order):
                level[k] = times[k] + max((level[s] for s in instance.succs[k]), default=0)
            keyed = sorted(range(n), key=lambda k: (-level[k], k))
        else:
            assert self.order is not None
            if sorted(self.order) != sorted(instance.ids):
                raise ValueError("explicit order must list every job id exactly once")
            keyed = [instance.index[j] for j in self.order]
        rank = [0] * n
        for r, k in enumerate(keyed):
            rank[k] = r
        return rank


FIFO = PriorityPolicy()


def list_schedule(
    instance: Instance,
    decision: Sequence[Alloc],
    policy: PriorityPolicy = FIFO,
    backend: str | None = None,
) -> Schedule:
    """Greedy list schedule: at time 0 and at every completion, enqueue newly
    ready jobs and start, in queue order, every job whose allocation fits."""
    decision = tuple(tuple(a) for a in decision)
    problems = check_decision(instance, decision)
    if problems:
        raise ValidationError(problems)
    times = [instance.time(k, a) for k, a in enumerate(decision)]
    den = kernels.common_denominator(times)
    dur = [int(t * den) for t in times]
    flat = [x for a in decision for x in a]
    succ_ptr, succ_idx = kernels.csr(instance.succs)
    pred_count = [len(p) for p in instance.preds]
    rank = policy.ranks(instance, dur)
    mod = kernels.pick(sum(dur) + 1, backend)
    starts = mod.list_schedule(instance.n, instance.d, list(instance.resources.capacities), flat, dur,
                               pred_count, succ_ptr, succ_idx, rank, policy.kind == "fifo")
    return Schedule(decision, tuple(Fraction(s, den) for s in starts), tuple(times))


def idle_violations(instance: Instance, schedule: Schedule) -> list[tuple[Fraction, str]]:
    """Replay check that no ready job that fits was left waiting at any event."""
    starts, ends = schedule.start_times, schedule.completion_times
    caps = instance.resources.capacities
    out = []
    for t in sorted({Fraction(0)} | set(ends)):
        running = [k for k in range(instance.n) if starts[k] <= t < ends[k]]
        used = [sum(schedule.allocation[k][i] for k in running) for i in range(instance.d)]
        for k in range(instance.n):
            if starts[k] <= t:
                continue
            if any(ends[p] > t for p in instance.preds[k]):
                continue
            if all(u + a <= c for u, a, c in zip(used, schedule.allocation[k], caps)):
                out.append((t, instance.ids[k]))
    return out


# -- interval analysis -------------------------------------------------------


@dataclass(frozen=True)
class Interval:
    start: Fraction
    end: Fraction
    utilization: tuple[int, ...]
    cls: int  # 1, 2 or 3
    fractions: dict = field(compare=False)  # job id -> executed fraction

    @property
    def length(self) -> Fraction:
        return self.end - self.start


@dataclass(frozen=True)
class IntervalReport:
    intervals: tuple[Interval, ...]
    mu: Fraction
    T1: Fraction
    T2: Fraction
    T3: Fraction

    @property
    def T(self) -> Fraction:
        return self.T1 + self.T2 + self.T3

    def to_json(self) -> dict:
        return {
            "mu": format_fraction(self.mu),
            "T1": format_fraction(self.T1),
            "T2": format_fraction(self.T2),
            "T3": format_fraction(self.T3),
            "intervals": [
                {
                    "start": format_fraction(iv.start),
                    "end": format_fraction(iv.end),
                    "utilization": list(iv.utilization),
                    "class": f"I{iv.cls}",
                    "fractions": {j: format_fraction(b) for j, b in iv.fractions.items()},
                }
                for iv in self.intervals
            ],
        }


def classify(util: Sequence[int], caps: Sequence[int], mu: Fraction) -> int:
    lo = [math.ceil(mu * P) for P in caps]
    hi = [math.ceil((1 - mu) * P) for P in caps]
    if any(u >= h for u, h in zip(util, hi)):
        return 3
    if any(u >= l for u, l in zip(util, lo)):
        return 2
    return 1


def interval_report(instance: Instance, schedule: Schedule, mu) -> IntervalReport:
    mu = Fraction(mu)
    caps = instance.resources.capacities
    starts, ends = schedule.start_times, schedule.completion_times
    cuts = sorted(set(starts) | set(ends))
    intervals = []
    totals = {1: Fraction(0), 2: Fraction(0), 3: Fraction(0)}
    for a, b in zip(cuts, cuts[1:]):
        running = [k for k in range(instance.n) if starts[k] <= a and b <= ends[k]]
        util = tuple(sum(schedule.allocation[k][i] for k in running) for i in range(instance.d))
        c = classify(util, caps, mu)
        fr = {instance.ids[k]: (b - a) / schedule.durations[k] for k in running}
        intervals.append(Interval(a, b, util, c, fr))
        totals[c] += b - a
    if cuts and cuts[0] != 0:
        raise ValueError("schedule does not start at time 0")
    return IntervalReport(tuple(intervals), mu, totals[1], totals[2], totals[3])


# -- bound verification ------------------------------------------------------


@dataclass(frozen=True)
class BoundCheck:
    name: str
    lhs: Fraction
    rhs: Fraction
    applicable: bool = True

    @property
    def ok(self) -> bool:
        return not self.applicable or self.lhs <= self.rhs

    @property
    def slack(self) -> Fraction:
        return self.rhs - self.lhs

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "lhs": format_fraction(self.lhs),
            "rhs": format_fraction(self.rhs),
            "slack": float(self.slack),
            "applicable": self.applicable,
            "ok": self.ok,
        }


def verify_phase_bounds(
    instance: Instance,
    schedule: Schedule,
    initial: Sequence[Alloc],
    mu,
    independent: bool = False,
    cap_exact: bool = True,
) -> list[BoundCheck]:
    """Interval-duration inequalities against the pre-cap allocation ``initial``.

    * ``partition``: T1 + T2 + T3 equals the makespan.
    * ``critical-path``: T1 + mu*T2 <= C(initial).
    * ``area``: mu*T2 + (1-mu)*T3 <= d*A(initial), only applicable when
      every capacity is at least 1/mu^2.
    * independent jobs add ``independent-cp``: mu*T2 <= C(initial) when no
      low-utilisation interval exists, otherwise T1 + T2 <= C(initial).

    The path-based checks need ``t(p) <= t(initial) / mu`` for capped jobs,
    which only the exact cap guarantees; ``cap_exact=False`` (some job fell
    back to a substitute table entry) marks them not applicable.
    """
    mu = Fraction(mu)
    rep = interval_report(instance, schedule, mu)
    m = aggregate_metrics(instance, initial)
    T = schedule.makespan
    checks = [
        BoundCheck("partition", rep.T, T),
        BoundCheck("partition-reverse", T, rep.T),
        BoundCheck("critical-path", rep.T1 + mu * rep.T2, m.C, applicable=cap_exact),
        BoundCheck("area", mu * rep.T2 + (1 - mu) * rep.T3, instance.d * m.A,
                   applicable=all(P * mu * mu >= 1 for P in instance.resources.capacities)),
    ]
    if independent:
        if not instance.edges:
            if rep.T1 == 0:
                checks.append(BoundCheck("independent-cp", mu * rep.T2, m.C, applicable=cap_exact))
            else:
                checks.append(BoundCheck("independent-cp", rep.T1 + rep.T2, m.C, applicable=cap_exact))
        else:
            checks.append(BoundCheck("independent-cp", Fraction(1), Fraction(0), applicable=False))
    return checks


# -- exact makespan ----------------------------------------------------------


@dataclass(frozen=True)
class MakespanResult:
    T_opt: Fraction
    schedule: Schedule
    space: int


def brute_force_makespan(
    instance: Instance,
    budget: OracleBudget | None = None,
    prune: bool = False,
    backend: str | None = None,
) -> MakespanResult:
    """Optimal makespan by branch and bound over job lists and allocations.

    Searches every table entry by default: a dominated allocation (slower and
    larger on average) may still pack better on a bottleneck type.
    """
    budget = budget or OracleBudget.from_env()
    options = job_options(instance, prune)
    space = math.prod(len(o) for o in options) * math.factorial(instance.n)
    if space > budget.max_schedule_space:
        raise OracleRefusal(f"schedule space {space} exceeds budget {budget.max_schedule_space}")
    d, n = instance.d, instance.n
    den = kernels.common_denominator(t for opts in options for _, t, _ in opts)
    opt_ptr, opt_alloc, opt_time = [0], [], []
    for opts in options:
        for alloc, t, _ in opts:
            opt_alloc.extend(alloc)
            opt_time.append(int(t * den))
        opt_ptr.append(len(opt_time))
    mins = [min(opt_time[opt_ptr[j]:opt_ptr[j + 1]]) for j in range(n)]
    tail = [0] * n
    for k in reversed(instance.topo_order):
        tail[k] = mins[k] + max((tail[s] for s in instance.succs[k]), default=0)
    min_work = []
    for j in range(n):
        for i in range(d):
            min_work.append(min(opt_alloc[o * d + i] * opt_time[o] for o in range(opt_ptr[j], opt_ptr[j + 1])))
    upper = sum(mins) + 1
    pred_ptr, pred_idx = kernels.csr(instance.preds)
    caps = list(instance.resources.capacities)
    mod = kernels.pick(upper * max(caps) * (sum(opt_time) + 1), backend)
    best, starts, choice = mod.optimal_makespan(n, d, caps, pred_ptr, pred_idx, opt_ptr, opt_alloc,
                                                opt_time, tail, min_work, upper)
    if starts is None:
        raise AssertionError("branch and bound found no schedule below the serial upper bound")
    decision = [options[j][choice[j]][0] for j in range(n)]
    sched = Schedule.of(instance, decision, [Fraction(s, den) for s in starts])
    return MakespanResult(Fraction(best, den), sched, space)


__all__ = [
    "FIFO",
    "BoundCheck",
    "Interval",
    "IntervalReport",
    "MakespanResult",
    "OracleRefusal",
    "PriorityPolicy",
    "brute_force_makespan",
    "classify",
    "idle_violations",
    "interval_report",
    "list_schedule",
    "verify_phase_bounds",
]
