"""Resource allocation for general DAGs.

Pipeline: drop dominated allocations, view the rest as a discrete
time-cost tradeoff project (cost = average area), solve the fractional
relaxation that minimises ``max(C, A)``, round it per job with a quantile
threshold ``rho``, then cap every component at ``ceil(mu * P_i)``.

Parameter selection and the closed-form objective functions live here too.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .core import (
    Alloc,
    Decision,
    ExecProfile,
    Instance,
    ResourceProfile,
    average_area,
    precedes_eq,
    type_areas,
)
from .lp import linprog_exact

PHI = (1 + math.sqrt(5)) / 2
# smallest denominators used when irrational parameters are made exact
PARAM_DENOMINATOR = 10**12


class AllocationError(ValueError):
    """No legal table entry is available for an adjusted allocation."""


# -- dominance pruning & DTCT ------------------------------------------------


def prune_dominated(profile: ExecProfile, resources: ResourceProfile) -> list[tuple[Alloc, Fraction, Fraction]]:
    """Non-dominated alternatives as ``(alloc, time, avg_area)``, sorted by time.

    An allocation is discarded only if some other one is strictly faster and
    has strictly smaller average area.
    """
    pts = [(t, average_area(resources, a, t), a) for a, t in profile.alternatives]
    pts.sort()
    kept = []
    # sorted by time: p is dominated iff some strictly faster entry has strictly smaller area
    best_area_before = None  # min area among entries with time < current time
    i = 0
    while i < len(pts):
        k = i
        while k < len(pts) and pts[k][0] == pts[i][0]:
            k += 1
        group = pts[i:k]
        for t, a, alloc in group:
            if best_area_before is None or not best_area_before < a:
                kept.append((alloc, t, a))
        group_min = min(a for _, a, _ in group)
        if best_area_before is None or group_min < best_area_before:
            best_area_before = group_min
        i = k
    return kept


@dataclass(frozen=True)
class DtctAlternative:
    time: Fraction
    cost: Fraction
    alloc: Alloc


@dataclass(frozen=True)
class DtctProject:
    tasks: tuple[tuple[DtctAlternative, ...], ...]
    edges: tuple[tuple[int, int], ...]

    def check(self) -> None:
        for alts in self.tasks:
            for x, y in zip(alts, alts[1:]):
                assert x.time < y.time, "alternatives must have increasing times"
                assert x.cost >= y.cost, "faster alternatives must not be cheaper"


def build_dtct(instance: Instance) -> DtctProject:
    tasks = []
    for job in instance.jobs:
        alts: dict[Fraction, DtctAlternative] = {}
        for alloc, t, a in prune_dominated(job.profile, instance.resources):
            cur = alts.get(t)
            if cur is None or (a, alloc) < (cur.cost, cur.alloc):
                alts[t] = DtctAlternative(t, a, alloc)
        tasks.append(tuple(alts[t] for t in sorted(alts)))
    edges = tuple((instance.index[a], instance.index[b]) for a, b in instance.edges)
    project = DtctProject(tuple(tasks), edges)
    project.check()
    return project


# -- fractional relaxation ---------------------------------------------------


@dataclass(frozen=True)
class FractionalSolution:
    project: DtctProject
    weights: tuple[tuple[Fraction, ...], ...]
    value: Fraction  # optimum of the relaxation, a lower bound on L_min

    def mean_time(self, j: int) -> Fraction:
        return sum((x * alt.time for x, alt in zip(self.weights[j], self.project.tasks[j])), Fraction(0))

    def mean_cost(self, j: int) -> Fraction:
        return sum((x * alt.cost for x, alt in zip(self.weights[j], self.project.tasks[j])), Fraction(0))


def solve_fractional(instance: Instance, project: DtctProject | None = None) -> FractionalSolution:
    """Minimise ``L`` over convex combinations of alternatives per job.

    Columns: one weight per alternative, one completion variable per job, and
    ``L`` last.  Rows: weights sum to one, completion at least the mean time
    (plus the predecessor's completion along every edge), every completion at
    most ``L`` and total mean cost at most ``L``.
    """
    project = project or build_dtct(instance)
    n = instance.n
    offsets = []
    nx = 0
    for alts in project.tasks:
        offsets.append(nx)
        nx += len(alts)
    col_c = nx
    col_L = nx + n
    width = col_L + 1

    def row() -> list[Fraction]:
        return [Fraction(0)] * width

    A_ub, b_ub, A_eq, b_eq = [], [], [], []
    for j, alts in enumerate(project.tasks):
        r = row()
        for k in range(len(alts)):
            r[offsets[j] + k] = Fraction(1)
        A_eq.append(r)
        b_eq.append(Fraction(1))

    def completion_row(j: int, pred: int | None) -> list[Fraction]:
        # mean_time_j + C_pred - C_j <= 0
        r = row()
        for k, alt in enumerate(project.tasks[j]):
            r[offsets[j] + k] = alt.time
        r[col_c + j] = Fraction(-1)
        if pred is not None:
            r[col_c + pred] = Fraction(1)
        return r

    for j in range(n):
        A_ub.append(completion_row(j, None))
        b_ub.append(Fraction(0))
    for a, b in project.edges:
        A_ub.append(completion_row(b, a))
        b_ub.append(Fraction(0))
    for j in range(n):
        r = row()
        r[col_c + j] = Fraction(1)
        r[col_L] = Fraction(-1)
        A_ub.append(r)
        b_ub.append(Fraction(0))
    r = row()
    for j, alts in enumerate(project.tasks):
        for k, alt in enumerate(alts):
            r[offsets[j] + k] = alt.cost
    r[col_L] = Fraction(-1)
    A_ub.append(r)
    b_ub.append(Fraction(0))

    cost = row()
    cost[col_L] = Fraction(1)
    res = linprog_exact(cost, A_ub, b_ub, A_eq, b_eq)
    weights = tuple(tuple(res.x[offsets[j] + k] for k in range(len(alts))) for j, alts in enumerate(project.tasks))
    return FractionalSolution(project, weights, res.value)


# -- rounding ----------------------------------------------------------------


def round_allocation(solution: FractionalSolution, rho: Fraction) -> Decision:
    """Per-job ``(1 - rho)``-quantile of the fractional time distribution.

    For job ``j`` pick the fastest alternative whose cumulative weight (over
    alternatives no slower than it) reaches ``1 - rho``.  The weight at or
    above that time is at least ``rho``, so its time is at most
    ``mean_time / rho``; costs fall as times grow, so its cost is at most
    ``mean_cost / (1 - rho)``.  Both facts are asserted for every job.
    """
    rho = Fraction(rho)
    if not 0 < rho < 1:
        raise ValueError(f"rho must lie in (0, 1), got {rho}")
    out = []
    for j, alts in enumerate(solution.project.tasks):
        acc = Fraction(0)
        pick = alts[-1]
        for x, alt in zip(solution.weights[j], alts):
            acc += x
            if acc >= 1 - rho:
                pick = alt
                break
        assert pick.time * rho <= solution.mean_time(j), "rounded time exceeds mean_time / rho"
        assert pick.cost * (1 - rho) <= solution.mean_cost(j), "rounded cost exceeds mean_cost / (1 - rho)"
        out.append(pick.alloc)
    return tuple(out)


# -- utilisation cap ---------------------------------------------------------


@dataclass(frozen=True)
class Adjustment:
    decision: Decision
    adjusted: tuple[bool, ...]
    fallback: tuple[bool, ...]  # table lacked the capped vector; substitute used


def cap_vector(alloc: Alloc, resources: ResourceProfile, mu: Fraction) -> Alloc:
    caps = [math.ceil(Fraction(mu) * P) for P in resources.capacities]
    return tuple(min(a, c) for a, c in zip(alloc, caps))


def adjust_allocation(instance: Instance, initial: Sequence[Alloc], mu) -> Adjustment:
    """Cap each component at ``ceil(mu * P_i)``.

    If the capped vector is not in the job's table, use the entry that is
    component-wise below it with the smallest time (ties: smallest vector).
    """
    mu = Fraction(mu)
    if not 0 < mu < Fraction(1, 2):
        raise ValueError(f"mu must lie in (0, 1/2), got {mu}")
    decision, adjusted, fallback = [], [], []
    for job, alloc in zip(instance.jobs, initial):
        alloc = tuple(alloc)
        capped = cap_vector(alloc, instance.resources, mu)
        used_fallback = False
        if capped not in job.profile:
            below = [(t, a) for a, t in job.profile.alternatives if precedes_eq(a, capped)]
            if not below:
                raise AllocationError(f"job {job.id!r}: no table entry at or below {capped}")
            capped = min(below)[1]
            used_fallback = True
        decision.append(capped)
        adjusted.append(capped != alloc)
        fallback.append(used_fallback)
    return Adjustment(tuple(decision), tuple(adjusted), tuple(fallback))


@dataclass(frozen=True)
class AdjustmentCheck:
    job: str
    time_ok: bool
    area_ok: bool
    applicable: bool  # every capacity at least 1 / mu^2


def check_adjustment(instance: Instance, initial: Sequence[Alloc], adj: Adjustment, mu) -> list[AdjustmentCheck]:
    """Evaluate the adjusted-job time and per-type area bounds exactly.

    ``t(p) <= t(p') / mu`` and ``a_i(p) <= d * a(p')`` for every type; only
    jobs adjusted by the exact cap rule (no fallback) are reported.
    """
    mu = Fraction(mu)
    res = instance.resources
    applicable = all(P * mu * mu >= 1 for P in res.capacities)
    out = []
    for k, job in enumerate(instance.jobs):
        if not adj.adjusted[k] or adj.fallback[k]:
            continue
        p0, p1 = tuple(initial[k]), adj.decision[k]
        t0, t1 = job.profile.time(p0), job.profile.time(p1)
        time_ok = t1 * mu <= t0
        bound = res.d * average_area(res, p0, t0)
        area_ok = all(a <= bound for a in type_areas(res, p1, t1))
        out.append(AdjustmentCheck(job.id, time_ok, area_ok, applicable))
    return out


# -- objective functions & parameter selection -------------------------------


def objective_values(d: int, mu, rho) -> dict:
    """``f_d(mu, rho)``, ``g_d(mu, rho)`` and ``h_d(mu)``.

    Exact when ``mu`` and ``rho`` are rationals, floats otherwise.
    """
    one = Fraction(1) if isinstance(mu, (int, Fraction)) and isinstance(rho, (int, Fraction)) else 1.0
    mu = mu * one
    rho = rho * one
    f = one / rho + d / ((one - mu) * (one - rho))
    g = (one - 2 * mu) / (mu * (one - mu) * rho) + d / ((one - mu) * (one - rho))
    return {"f": f, "g": g, "h": quartic(d, mu)}


def quartic(d: int, mu):
    """Numerator polynomial whose sign is opposite to the slope of the large-d ratio."""
    return (2 * d + 4) * mu**4 - (d + 8) * mu**3 + 8 * mu**2 - 4 * mu + 1


def quartic_root(d: int, width: Fraction = Fraction(1, 10**9)) -> Fraction:
    """Root of the quartic in ``(0, 3/8]`` by exact bisection (``d >= 22``).

    Returns an exact root when bisection lands on one, else the left end of
    the final bracket (where the quartic is still positive).
    """
    lo, hi = Fraction(0), Fraction(3, 8)
    if quartic(d, hi) > 0:
        raise ValueError(f"no sign change in (0, 3/8] for d={d}")
    if quartic(d, hi) == 0:
        return hi
    while hi - lo > width:
        mid = (lo + hi) / 2
        v = quartic(d, mid)
        if v == 0:
            return mid
        if v > 0:
            lo = mid
        else:
            hi = mid
    return lo


def count_sign_changes(d: int, steps: int = 3000) -> int:
    """Sign changes of the quartic on a uniform grid over ``(0, 3/8]``."""
    prev = quartic(d, Fraction(3, 8 * steps))
    changes = 0
    for k in range(2, steps + 1):
        cur = quartic(d, Fraction(3 * k, 8 * steps))
        if (cur > 0) != (prev > 0):
            changes += 1
        prev = cur
    return changes


def rationalize(x: float, round_up: bool = False) -> Fraction:
    q = Fraction(x).limit_denominator(PARAM_DENOMINATOR)
    if round_up and q < Fraction(x):
        q += Fraction(1, PARAM_DENOMINATOR)
    return q


MU_GOLDEN = 1 - 1 / PHI  # (3 - sqrt 5) / 2


@dataclass(frozen=True)
class ParamChoice:
    mu: Fraction
    rho: Fraction
    graph_class: str
    guaranteed_ratio: float
    required_pmin: int
    epsilon: Fraction = Fraction(0)


def theorem1_ratio(d: int) -> float:
    return PHI * d + 2 * math.sqrt(PHI * d) + 1


def large_d_rho(d: int, mu: float) -> float:
    X = (1 - 2 * mu) / (mu * (1 - mu))
    Y = 1 / (1 - mu)
    return math.sqrt(X) / (math.sqrt(X) + math.sqrt(d * Y))


def large_d_ratio(d: int, mu: float) -> float:
    X = (1 - 2 * mu) / (mu * (1 - mu))
    Y = 1 / (1 - mu)
    return (math.sqrt(X) + math.sqrt(d * Y)) ** 2


def estimated_ratio(d: int) -> float:
    """Large-d ratio with the root replaced by its cube-root estimate ``1/d^(1/3)``."""
    c = d ** (1 / 3)
    return (d * c + 2 * d * math.sqrt(1 - 2 / c) + c * c - 2 * c) / (c - 1)


def select_parameters(d: int, graph_class: str = "general", epsilon=Fraction(1, 10)) -> ParamChoice:
    """Parameters ``(mu, rho)`` minimising the proven ratio for ``d`` and a graph class.

    ``mu`` and ``rho`` are returned as exact rationals.  When the optimal
    ``mu`` is the golden-ratio value it is rounded *up* by at most 1e-12,
    which keeps the condition ``(1 - mu)^2 <= mu`` that the analysis needs.
    ``rho`` is only consumed by the LP allocator; classes with other
    allocators carry the general-DAG value.
    """
    if d < 1:
        raise ValueError("d must be at least 1")
    epsilon = Fraction(epsilon)
    mu_g = rationalize(MU_GOLDEN, round_up=True)
    rho_g = rationalize(1 / (math.sqrt(PHI * d) + 1))
    if graph_class == "general":
        if d <= 21:
            return ParamChoice(mu_g, rho_g, "general", theorem1_ratio(d), 7)
        mu = quartic_root(d)
        rho = rationalize(large_d_rho(d, float(mu)))
        return ParamChoice(mu, rho, "general", large_d_ratio(d, float(mu)), math.ceil(d ** (2 / 3) - 1e-12))
    if graph_class == "sp":
        scale = 1 + float(epsilon)
        if d <= 3:
            return ParamChoice(mu_g, rho_g, "sp", scale * (PHI * d + 1), 7, epsilon)
        mu = rationalize(1 / (math.sqrt(d - 1) + 1), round_up=True)
        return ParamChoice(mu, rho_g, "sp", scale * (d + 2 * math.sqrt(d - 1)),
                           math.ceil(d + 2 * math.sqrt(d - 1)), epsilon)
    if graph_class == "independent":
        if d <= 3:
            # golden-ratio cap: both interval cases give phi*d + 1
            return ParamChoice(mu_g, rho_g, "independent", PHI * d + 1, 7)
        mu = rationalize(1 / (math.sqrt(d - 1) + 1), round_up=True)
        return ParamChoice(mu, rho_g, "independent", d + 2 * math.sqrt(d - 1),
                           math.ceil(d + 2 * math.sqrt(d - 1)))
    raise ValueError(f"unknown graph class {graph_class!r}")
