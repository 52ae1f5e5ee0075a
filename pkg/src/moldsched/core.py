"""Domain types, per-job and aggregate metrics, and schedule checking.

Durations, works and areas are :class:`fractions.Fraction` throughout so that
every comparison made by the verifiers is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence, Union

Alloc = tuple[int, ...]
Decision = tuple[Alloc, ...]
JobRef = Union[int, str]


class ModelError(ValueError):
    """Base class for malformed model objects."""


class ValidationError(ModelError):
    """Raised when an instance violates a model invariant.

    ``problems`` holds one human-readable line per offender.
    """

    def __init__(self, problems: Sequence[str]):
        self.problems = list(problems)
        head = "; ".join(self.problems[:5])
        more = f" (+{len(self.problems) - 5} more)" if len(self.problems) > 5 else ""
        super().__init__(f"invalid instance: {head}{more}")


class AllocationLookupError(KeyError):
    """The requested allocation is not an entry of the job's table."""


def as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("booleans are not durations")
    if isinstance(value, float):
        raise TypeError("floats are not accepted as exact durations; use Fraction or a 'num/den' string")
    return Fraction(value)


def format_fraction(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def precedes_eq(p: Alloc, q: Alloc) -> bool:
    """Component-wise ``p <= q``."""
    return all(a <= b for a, b in zip(p, q))


@dataclass(frozen=True)
class ResourceProfile:
    capacities: tuple[int, ...]

    def __post_init__(self):
        caps = tuple(self.capacities)
        if not caps:
            raise ModelError("at least one resource type is required")
        for c in caps:
            if isinstance(c, bool) or not isinstance(c, int) or c < 1:
                raise ModelError(f"capacities must be positive integers, got {c!r}")
        object.__setattr__(self, "capacities", caps)

    @property
    def d(self) -> int:
        return len(self.capacities)

    @property
    def pmin(self) -> int:
        return min(self.capacities)

    @property
    def q(self) -> int:
        """Number of distinct allocation vectors, the product of capacities."""
        return math.prod(self.capacities)

    def check_alloc(self, alloc: Alloc) -> list[str]:
        """Problems with ``alloc`` against this profile (empty when valid)."""
        out = []
        if len(alloc) != self.d:
            return [f"allocation {alloc} has {len(alloc)} components, expected {self.d}"]
        for i, (a, cap) in enumerate(zip(alloc, self.capacities)):
            if isinstance(a, bool) or not isinstance(a, int) or a < 0:
                out.append(f"allocation {alloc}: component {i} must be a non-negative integer")
            elif a > cap:
                out.append(f"allocation {alloc}: component {i} exceeds capacity {cap}")
        if not out and not any(alloc):
            out.append(f"allocation {alloc} uses no resource at all")
        return out


@dataclass(frozen=True)
class ExecProfile:
    """Sparse execution-time table of one job.

    Only listed allocations are legal for the job.  Entries are kept sorted by
    allocation vector, which makes equality and serialization canonical.
    """

    alternatives: tuple[tuple[Alloc, Fraction], ...]

    def __post_init__(self):
        items = []
        for alloc, t in self.alternatives:
            alloc = tuple(alloc)
            t = as_fraction(t)
            if t <= 0:
                raise ModelError(f"execution time for {alloc} must be positive, got {t}")
            items.append((alloc, t))
        if not items:
            raise ModelError("an execution profile needs at least one alternative")
        items.sort()
        for (a, _), (b, _) in zip(items, items[1:]):
            if a == b:
                raise ModelError(f"duplicate allocation {a} in execution profile")
        widths = {len(a) for a, _ in items}
        if len(widths) != 1:
            raise ModelError("allocation vectors of one job must have the same length")
        object.__setattr__(self, "alternatives", tuple(items))

    @classmethod
    def from_mapping(cls, table: Mapping[Alloc, object]) -> "ExecProfile":
        return cls(tuple((tuple(a), as_fraction(t)) for a, t in table.items()))

    @cached_property
    def table(self) -> dict[Alloc, Fraction]:
        return dict(self.alternatives)

    def time(self, alloc: Alloc) -> Fraction:
        try:
            return self.table[tuple(alloc)]
        except KeyError:
            raise AllocationLookupError(f"allocation {tuple(alloc)} is not in the execution profile") from None

    def allocs(self) -> list[Alloc]:
        return [a for a, _ in self.alternatives]

    def __len__(self) -> int:
        return len(self.alternatives)

    def __contains__(self, alloc) -> bool:
        return tuple(alloc) in self.table


@dataclass(frozen=True)
class Job:
    id: str
    profile: ExecProfile


@dataclass(frozen=True)
class Instance:
    """Resource profile, jobs and precedence edges (by job id).

    Construction validates every model invariant and raises
    :class:`ValidationError` listing all offenders.
    """

    resources: ResourceProfile
    jobs: tuple[Job, ...]
    edges: tuple[tuple[str, str], ...] = ()

    def __post_init__(self):
        jobs = tuple(self.jobs)
        edges = tuple(sorted({(str(a), str(b)) for a, b in self.edges}))
        object.__setattr__(self, "jobs", jobs)
        object.__setattr__(self, "edges", edges)
        problems = _instance_problems(self.resources, jobs, edges)
        if problems:
            raise ValidationError(problems)

    @classmethod
    def build(
        cls,
        capacities: Iterable[int],
        jobs: Iterable[tuple[str, Mapping[Alloc, object]]],
        edges: Iterable[tuple[str, str]] = (),
    ) -> "Instance":
        """Convenience constructor from plain Python data."""
        return cls(
            ResourceProfile(tuple(capacities)),
            tuple(Job(str(jid), ExecProfile.from_mapping(tab)) for jid, tab in jobs),
            tuple(edges),
        )

    @property
    def n(self) -> int:
        return len(self.jobs)

    @property
    def d(self) -> int:
        return self.resources.d

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(j.id for j in self.jobs)

    @cached_property
    def index(self) -> dict[str, int]:
        return {jid: k for k, jid in enumerate(self.ids)}

    @cached_property
    def preds(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.jobs]
        for a, b in self.edges:
            out[self.index[b]].append(self.index[a])
        return tuple(tuple(sorted(p)) for p in out)

    @cached_property
    def succs(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in self.jobs]
        for a, b in self.edges:
            out[self.index[a]].append(self.index[b])
        return tuple(tuple(sorted(s)) for s in out)

    @cached_property
    def topo_order(self) -> tuple[int, ...]:
        order = _topological_order(self.n, self.succs)
        assert order is not None
        return order

    def job_index(self, job: JobRef) -> int:
        if isinstance(job, str):
            return self.index[job]
        return job

    def time(self, job: JobRef, alloc: Alloc) -> Fraction:
        return self.jobs[self.job_index(job)].profile.time(alloc)


def _topological_order(n: int, succs: Sequence[Sequence[int]]) -> tuple[int, ...] | None:
    indeg = [0] * n
    for s in succs:
        for b in s:
            indeg[b] += 1
    ready = [k for k in range(n) if indeg[k] == 0]
    order = []
    while ready:
        ready.sort(reverse=True)
        k = ready.pop()
        order.append(k)
        for b in succs[k]:
            indeg[b] -= 1
            if indeg[b] == 0:
                ready.append(b)
    return tuple(order) if len(order) == n else None


def _find_cycle(ids: Sequence[str], succs: Sequence[Sequence[int]]) -> list[str]:
    color = [0] * len(ids)
    stack: list[int] = []

    def dfs(u: int) -> list[int] | None:
        color[u] = 1
        stack.append(u)
        for v in succs[u]:
            if color[v] == 1:
                return stack[stack.index(v):] + [v]
            if color[v] == 0:
                found = dfs(v)
                if found:
                    return found
        stack.pop()
        color[u] = 2
        return None

    for u in range(len(ids)):
        if color[u] == 0:
            cyc = dfs(u)
            if cyc:
                return [ids[k] for k in cyc]
    return []


def _instance_problems(res: ResourceProfile, jobs, edges) -> list[str]:
    problems: list[str] = []
    seen: set[str] = set()
    for job in jobs:
        if job.id in seen:
            problems.append(f"duplicate job id {job.id!r}")
        seen.add(job.id)
        if len(job.profile) > res.q:
            problems.append(f"job {job.id!r} lists {len(job.profile)} allocations, more than Q={res.q}")
        for alloc, _ in job.profile.alternatives:
            problems.extend(f"job {job.id!r}: {msg}" for msg in res.check_alloc(alloc))
        for p, q, why in validate_monotonicity(job.profile):
            problems.append(f"job {job.id!r}: monotonicity violated between {p} and {q}: {why}")
    index = {j.id: k for k, j in enumerate(jobs)}
    succs: list[list[int]] = [[] for _ in jobs]
    for a, b in edges:
        missing = [x for x in (a, b) if x not in index]
        if missing:
            problems.append(f"edge ({a!r}, {b!r}) references unknown job(s) {missing}")
            continue
        if a == b:
            problems.append(f"self-loop on job {a!r}")
            continue
        succs[index[a]].append(index[b])
    if len(index) == len(jobs) and _topological_order(len(jobs), succs) is None:
        cyc = _find_cycle([j.id for j in jobs], succs)
        problems.append("precedence cycle: " + " -> ".join(cyc))
    return problems


def validate_monotonicity(profile: ExecProfile) -> list[tuple[Alloc, Alloc, str]]:
    """All comparable pairs ``p <= q`` breaking the monotonic-job assumption.

    Requires ``t(q) <= t(p) <= max_i(q_i / p_i) * t(q)``.  A type with
    ``p_i == q_i == 0`` contributes ratio 1; a type with ``p_i == 0 < q_i``
    makes the upper bound vacuous.
    """
    bad = []
    alts = profile.alternatives
    for p, tp in alts:
        for q, tq in alts:
            if p == q or not precedes_eq(p, q):
                continue
            if tq > tp:
                bad.append((p, q, f"t{q}={tq} > t{p}={tp}"))
                continue
            ratio = speedup_ratio(p, q)
            if ratio is not None and tp > ratio * tq:
                bad.append((p, q, f"t{p}={tp} > {ratio}*t{q}={ratio * tq} (superlinear speedup)"))
    return bad


def speedup_ratio(p: Alloc, q: Alloc) -> Fraction | None:
    """``max_i q_i / p_i`` for ``p <= q``; ``None`` when the bound is vacuous."""
    ratio = Fraction(1)
    for a, b in zip(p, q):
        if a == 0:
            if b > 0:
                return None
            continue
        ratio = max(ratio, Fraction(b, a))
    return ratio


# -- per-job metrics ---------------------------------------------------------


def type_areas(res: ResourceProfile, alloc: Alloc, t: Fraction) -> tuple[Fraction, ...]:
    return tuple(Fraction(a, cap) * t for a, cap in zip(alloc, res.capacities))


def average_area(res: ResourceProfile, alloc: Alloc, t: Fraction) -> Fraction:
    return sum(type_areas(res, alloc, t), Fraction(0)) / res.d


def work(instance: Instance, job: JobRef, alloc: Alloc, type_index: int) -> Fraction:
    """Work ``p_i * t(p)`` of ``job`` on resource type ``type_index``."""
    if not 0 <= type_index < instance.d:
        raise IndexError(f"type index {type_index} out of range for d={instance.d}")
    return alloc[type_index] * instance.time(job, alloc)


def area(instance: Instance, job: JobRef, alloc: Alloc, type_index: int) -> Fraction:
    return work(instance, job, alloc, type_index) / instance.resources.capacities[type_index]


def avg_area(instance: Instance, job: JobRef, alloc: Alloc) -> Fraction:
    return average_area(instance.resources, tuple(alloc), instance.time(job, alloc))


# -- aggregate metrics -------------------------------------------------------


@dataclass(frozen=True)
class Metrics:
    A: Fraction
    A_per_type: tuple[Fraction, ...]
    C: Fraction
    critical_path: tuple[str, ...]

    @property
    def L(self) -> Fraction:
        return max(self.A, self.C)


def check_decision(instance: Instance, decision: Sequence[Alloc]) -> list[str]:
    if len(decision) != instance.n:
        return [f"decision has {len(decision)} entries for {instance.n} jobs"]
    out = []
    for job, alloc in zip(instance.jobs, decision):
        alloc = tuple(alloc)
        out.extend(f"job {job.id!r}: {m}" for m in instance.resources.check_alloc(alloc))
        if alloc not in job.profile:
            out.append(f"job {job.id!r}: allocation {alloc} is not in its execution profile")
    return out


def longest_path(instance: Instance, times: Sequence[Fraction]) -> tuple[Fraction, tuple[int, ...]]:
    """Length and job indices of a longest source-to-sink path."""
    finish: list[Fraction] = [Fraction(0)] * instance.n
    back: list[int] = [-1] * instance.n
    for k in instance.topo_order:
        best, arg = Fraction(0), -1
        for p in instance.preds[k]:
            if finish[p] > best:
                best, arg = finish[p], p
        finish[k] = best + times[k]
        back[k] = arg
    if not instance.n:
        return Fraction(0), ()
    end = max(range(instance.n), key=lambda k: (finish[k], -k))
    path = []
    k = end
    while k != -1:
        path.append(k)
        k = back[k]
    return finish[end], tuple(reversed(path))


def aggregate_metrics(instance: Instance, decision: Sequence[Alloc]) -> Metrics:
    problems = check_decision(instance, decision)
    if problems:
        raise ValidationError(problems)
    res = instance.resources
    times = [instance.time(k, tuple(a)) for k, a in enumerate(decision)]
    per_type = [Fraction(0)] * res.d
    for alloc, t in zip(decision, times):
        for i, a in enumerate(type_areas(res, tuple(alloc), t)):
            per_type[i] += a
    A = sum(per_type, Fraction(0)) / res.d
    C, path = longest_path(instance, times)
    return Metrics(A, tuple(per_type), C, tuple(instance.ids[k] for k in path))


# -- schedules ---------------------------------------------------------------


@dataclass(frozen=True)
class Schedule:
    allocation: Decision
    start_times: tuple[Fraction, ...]
    durations: tuple[Fraction, ...]

    @classmethod
    def of(cls, instance: Instance, decision: Sequence[Alloc], starts: Sequence) -> "Schedule":
        decision = tuple(tuple(a) for a in decision)
        durs = tuple(instance.time(k, a) for k, a in enumerate(decision))
        return cls(decision, tuple(as_fraction(s) for s in starts), durs)

    @property
    def completion_times(self) -> tuple[Fraction, ...]:
        return tuple(s + t for s, t in zip(self.start_times, self.durations))

    @property
    def makespan(self) -> Fraction:
        return max(self.completion_times, default=Fraction(0))

    def to_json(self, instance: Instance) -> dict:
        return {
            "start_times": {jid: format_fraction(s) for jid, s in zip(instance.ids, self.start_times)},
            "allocations": {jid: list(a) for jid, a in zip(instance.ids, self.allocation)},
            "makespan": format_fraction(self.makespan),
        }

    @classmethod
    def from_json(cls, instance: Instance, data: Mapping) -> "Schedule":
        starts = [Fraction(data["start_times"][jid]) for jid in instance.ids]
        allocs = [tuple(int(x) for x in data["allocations"][jid]) for jid in instance.ids]
        return cls.of(instance, allocs, starts)


@dataclass(frozen=True)
class Violation:
    kind: str  # "capacity" | "precedence" | "allocation" | "time"
    jobs: tuple[str, ...]
    time: Fraction | None = None
    type_index: int | None = None
    detail: str = field(default="", compare=False)


def validate_schedule(instance: Instance, schedule: Schedule) -> list[Violation]:
    """Every violated validity condition; an empty list means valid.

    Resource usage is piecewise constant between start/completion events, so
    capacities are checked at each event boundary only.
    """
    out: list[Violation] = []
    ids = instance.ids
    if len(schedule.start_times) != instance.n or len(schedule.allocation) != instance.n:
        return [Violation("allocation", (), detail="schedule does not cover every job exactly once")]
    for k, (alloc, s) in enumerate(zip(schedule.allocation, schedule.start_times)):
        for msg in check_decision_entry(instance, k, alloc):
            out.append(Violation("allocation", (ids[k],), detail=msg))
        if s < 0:
            out.append(Violation("time", (ids[k],), s, detail="negative start time"))
        if instance.jobs[k].profile.table.get(tuple(alloc)) != schedule.durations[k]:
            out.append(Violation("allocation", (ids[k],), detail="duration does not match the profile"))
    starts, ends = schedule.start_times, schedule.completion_times
    for a, b in instance.edges:
        ia, ib = instance.index[a], instance.index[b]
        if starts[ib] < ends[ia]:
            out.append(Violation("precedence", (a, b), starts[ib],
                                 detail=f"{b} starts at {starts[ib]} before {a} completes at {ends[ia]}"))
    caps = instance.resources.capacities
    for t in sorted(set(starts)):
        running = [k for k in range(instance.n) if starts[k] <= t < ends[k]]
        for i, cap in enumerate(caps):
            used = sum(schedule.allocation[k][i] for k in running)
            if used > cap:
                out.append(Violation("capacity", tuple(ids[k] for k in running), t, i,
                                     detail=f"type {i} uses {used} > {cap} at time {t}"))
    return out


def check_decision_entry(instance: Instance, k: int, alloc: Alloc) -> list[str]:
    msgs = instance.resources.check_alloc(tuple(alloc))
    if not msgs and tuple(alloc) not in instance.jobs[k].profile:
        msgs.append(f"allocation {tuple(alloc)} not in the execution profile")
    return msgs
