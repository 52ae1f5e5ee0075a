"""End-to-end runs: allocate, cap, list-schedule, then check every bound."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from .alloc_general import (
    AllocationError,
    ParamChoice,
    adjust_allocation,
    check_adjustment,
    round_allocation,
    select_parameters,
    solve_fractional,
)
from .alloc_special import NotSeriesParallel, allocate_independent, fptas_allocate, recognize_sp
from .core import Decision, Instance, aggregate_metrics, format_fraction, validate_schedule
from .oracles import OracleBudget, OracleRefusal, canonical_key, exact_min_L
from .scheduler import (
    PriorityPolicy,
    brute_force_makespan,
    idle_violations,
    interval_report,
    list_schedule,
    verify_phase_bounds,
)

METHODS = ("auto", "lp", "fptas", "independent", "exact-oracle")
_METHOD_CLASS = {"lp": "general", "fptas": "sp", "independent": "independent"}
_CLASS_METHOD = {"general": "lp", "sp": "fptas", "independent": "independent"}


class MethodError(ValueError):
    """The requested allocator does not apply to this instance."""


def graph_class(instance: Instance) -> str:
    if not instance.edges:
        return "independent"
    try:
        recognize_sp(instance)
    except NotSeriesParallel:
        return "general"
    return "sp"


@dataclass(frozen=True)
class RunOptions:
    method: str = "auto"
    policy: PriorityPolicy = field(default_factory=PriorityPolicy)
    mu: Fraction | None = None
    rho: Fraction | None = None
    epsilon: Fraction = Fraction(1, 10)
    strict: bool = False
    oracle: bool = True  # compute L_min when the budget allows
    makespan_oracle: bool = False  # also compute T_opt (always on for exact-oracle)
    seed: int | None = None
    timing: bool = False
    budget: OracleBudget | None = None
    backend: str | None = None


@dataclass
class Check:
    name: str
    ok: bool
    applicable: bool = True
    detail: str = ""

    def to_json(self) -> dict:
        return {"name": self.name, "ok": self.ok, "applicable": self.applicable, "detail": self.detail}


@dataclass
class RunReport:
    instance_id: str
    instance_hash: str
    n: int
    d: int
    pmin: int
    graph_class: str
    method: str
    policy: str
    params: ParamChoice
    overridden: bool
    seed: int | None
    refusal: str | None = None
    L_bar: Fraction | None = None
    L_min: Fraction | None = None
    T_opt: Fraction | None = None
    C_initial: Fraction | None = None
    A_initial: Fraction | None = None
    L_initial: Fraction | None = None
    T: Fraction | None = None
    lower_bound: Fraction | None = None
    lower_bound_kind: str | None = None
    adjusted_jobs: tuple[str, ...] = ()
    fallback_jobs: tuple[str, ...] = ()
    T1: Fraction | None = None
    T2: Fraction | None = None
    T3: Fraction | None = None
    checks: list[Check] = field(default_factory=list)
    wall_time: float | None = None
    initial: Decision | None = None
    schedule: Any = None  # core.Schedule

    @property
    def guaranteed_ratio(self) -> float | None:
        return None if self.overridden else self.params.guaranteed_ratio

    @property
    def preconditions_hold(self) -> bool:
        return self.pmin >= self.params.required_pmin

    @property
    def ratio(self) -> Fraction | None:
        if self.T is None or not self.lower_bound:
            return None
        return self.T / self.lower_bound

    @property
    def ratio_opt(self) -> Fraction | None:
        if self.T is None or not self.T_opt:
            return None
        return self.T / self.T_opt

    @property
    def ok(self) -> bool:
        return self.refusal is None and all(c.ok or not c.applicable for c in self.checks)

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def failed(self) -> list[str]:
        return [c.name for c in self.checks if c.applicable and not c.ok]

    def to_json(self) -> dict:
        def fr(x):
            return None if x is None else format_fraction(x)

        def fl(x):
            return None if x is None else float(x)

        out = {
            "instance_id": self.instance_id,
            "instance_hash": self.instance_hash,
            "n": self.n,
            "d": self.d,
            "pmin": self.pmin,
            "graph_class": self.graph_class,
            "method": self.method,
            "policy": self.policy,
            "mu": format_fraction(self.params.mu),
            "rho": format_fraction(self.params.rho),
            "mu_decimal": float(self.params.mu),
            "rho_decimal": float(self.params.rho),
            "epsilon": format_fraction(self.params.epsilon),
            "parameters_overridden": self.overridden,
            "required_pmin": self.params.required_pmin,
            "preconditions_hold": self.preconditions_hold,
            "guaranteed_ratio": self.guaranteed_ratio,
            "seed": self.seed,
            "refusal": self.refusal,
            "L_bar": fr(self.L_bar),
            "L_min": fr(self.L_min),
            "T_opt": fr(self.T_opt),
            "C_initial": fr(self.C_initial),
            "A_initial": fr(self.A_initial),
            "L_initial": fr(self.L_initial),
            "T": fr(self.T),
            "T1": fr(self.T1),
            "T2": fr(self.T2),
            "T3": fr(self.T3),
            "lower_bound": fr(self.lower_bound),
            "lower_bound_kind": self.lower_bound_kind,
            "ratio": fl(self.ratio),
            "ratio_to_T_opt": fl(self.ratio_opt),
            "adjusted_jobs": list(self.adjusted_jobs),
            "fallback_jobs": list(self.fallback_jobs),
            "checks": [c.to_json() for c in self.checks],
            "ok": self.ok,
        }
        if self.wall_time is not None:
            out["wall_time"] = round(self.wall_time, 6)
        return out

    def csv_row(self) -> dict:
        j = self.to_json()
        keys = ("instance_id", "n", "d", "graph_class", "method", "policy", "mu", "mu_decimal", "rho", "rho_decimal", "L_bar", "L_min",
                "C_initial", "A_initial", "T", "lower_bound_kind", "ratio", "guaranteed_ratio", "ok", "seed")
        row = {k: j[k] for k in keys}
        row["failed_checks"] = ";".join(self.failed())
        return row


def choose_method(instance: Instance, opts: RunOptions, cls: str) -> tuple[str, ParamChoice, bool]:
    method = opts.method
    if method not in METHODS:
        raise MethodError(f"unknown method {method!r}; expected one of {METHODS}")
    if method == "auto":
        method = _CLASS_METHOD[cls]
    if method == "fptas" and cls == "general":
        raise MethodError("fptas needs a series-parallel precedence graph")
    if method == "independent" and cls != "independent":
        raise MethodError("the independent allocator needs an instance without edges")
    param_class = _METHOD_CLASS.get(method, cls)
    params = select_parameters(instance.d, param_class, opts.epsilon)
    overridden = False
    if opts.mu is not None or opts.rho is not None:
        mu = Fraction(opts.mu) if opts.mu is not None else params.mu
        rho = Fraction(opts.rho) if opts.rho is not None else params.rho
        overridden = (mu, rho) != (params.mu, params.rho)
        params = ParamChoice(mu, rho, params.graph_class, params.guaranteed_ratio, params.required_pmin,
                             params.epsilon)
    return method, params, overridden


def allocate(instance: Instance, method: str, params: ParamChoice, budget=None, backend=None) -> dict:
    """Initial decision ``p'`` from the chosen allocator plus side results."""
    out: dict[str, Any] = {}
    if method == "lp":
        sol = solve_fractional(instance)
        out["L_bar"] = sol.value
        out["initial"] = round_allocation(sol, params.rho)
    elif method == "fptas":
        res = fptas_allocate(instance, recognize_sp(instance), params.epsilon)
        out["initial"] = res.decision
        out["fptas_lower"] = res.lower
    elif method == "independent":
        out["initial"] = allocate_independent(instance)
    elif method == "exact-oracle":
        res = exact_min_L(instance, budget, backend=backend)
        out["initial"] = res.witness
        out["L_min"] = res.L_min
    else:
        raise MethodError(f"unknown method {method!r}")
    return out


def run_instance(instance: Instance, opts: RunOptions = RunOptions(), instance_id: str = "instance") -> RunReport:
    """Full pipeline with every applicable bound evaluated exactly."""
    started = time.perf_counter()
    cls = graph_class(instance)
    method, params, overridden = choose_method(instance, opts, cls)
    rep = RunReport(
        instance_id=instance_id,
        instance_hash=canonical_key(instance)[:16],
        n=instance.n,
        d=instance.d,
        pmin=instance.resources.pmin,
        graph_class=cls,
        method=method,
        policy=opts.policy.kind,
        params=params,
        overridden=overridden,
        seed=opts.seed,
    )
    if opts.strict and not rep.preconditions_hold:
        rep.refusal = (f"P^min = {rep.pmin} is below the {params.required_pmin} required for the "
                       f"{params.graph_class} guarantee with d = {instance.d}")
        return _finish(rep, opts, started)
    budget = opts.budget or OracleBudget.from_env()
    alloc = allocate(instance, method, params, budget, opts.backend)
    initial = alloc["initial"]
    rep.initial = initial
    rep.L_bar = alloc.get("L_bar")
    rep.L_min = alloc.get("L_min")
    if rep.L_min is None and opts.oracle:
        try:
            rep.L_min = exact_min_L(instance, budget, backend=opts.backend).L_min
        except OracleRefusal:
            pass
    if method == "exact-oracle" or opts.makespan_oracle:
        try:
            rep.T_opt = brute_force_makespan(instance, budget, backend=opts.backend).T_opt
        except OracleRefusal:
            if method == "exact-oracle":
                raise
    m0 = aggregate_metrics(instance, initial)
    rep.C_initial, rep.A_initial, rep.L_initial = m0.C, m0.A, m0.L
    try:
        adj = adjust_allocation(instance, initial, params.mu)
    except AllocationError as exc:
        rep.refusal = str(exc)
        return _finish(rep, opts, started)
    ids = instance.ids
    rep.adjusted_jobs = tuple(ids[k] for k, f in enumerate(adj.adjusted) if f)
    rep.fallback_jobs = tuple(ids[k] for k, f in enumerate(adj.fallback) if f)
    sched = list_schedule(instance, adj.decision, opts.policy, opts.backend)
    rep.schedule = sched
    rep.T = sched.makespan
    checks = rep.checks

    viol = validate_schedule(instance, sched)
    checks.append(Check("schedule-valid", not viol, detail="; ".join(v.detail for v in viol[:3])))
    idle = idle_violations(instance, sched)
    checks.append(Check("work-conservation", not idle,
                        detail="; ".join(f"{j} idle at {t}" for t, j in idle[:3])))
    cap_exact = not rep.fallback_jobs
    bounds = verify_phase_bounds(instance, sched, initial, params.mu, independent=cls == "independent",
                                 cap_exact=cap_exact)
    for b in bounds:
        if b.name == "partition":
            continue
        name = "partition" if b.name == "partition-reverse" else b.name
        checks.append(Check(name, b.ok, b.applicable, f"{float(b.lhs):.9g} <= {float(b.rhs):.9g}"))
    ivr = interval_report(instance, sched, params.mu)
    rep.T1, rep.T2, rep.T3 = ivr.T1, ivr.T2, ivr.T3
    adj_checks = check_adjustment(instance, initial, adj, params.mu)
    app = all(c.applicable for c in adj_checks) if adj_checks else True
    bad = [c.job for c in adj_checks if not (c.time_ok and c.area_ok)]
    checks.append(Check("adjustment", not bad, app and bool(adj_checks), ", ".join(bad)))
    m1 = aggregate_metrics(instance, adj.decision)
    checks.append(Check("area-below-makespan", m1.A <= rep.T, detail=f"{m1.A} <= {rep.T}"))

    if method == "lp":
        checks.append(Check("rounding-time", m0.C * params.rho <= rep.L_bar,
                            detail=f"C(p')*rho={float(m0.C * params.rho):.9g} <= {rep.L_bar}"))
        checks.append(Check("rounding-area", m0.A * (1 - params.rho) <= rep.L_bar,
                            detail=f"A(p')*(1-rho)={float(m0.A * (1 - params.rho)):.9g} <= {rep.L_bar}"))
        if rep.L_min is not None:
            checks.append(Check("relaxation-below-optimum", rep.L_bar <= rep.L_min,
                                detail=f"{rep.L_bar} <= {rep.L_min}"))
    if method == "fptas" and rep.L_min is not None:
        checks.append(Check("fptas-guarantee", m0.L <= (1 + params.epsilon) * rep.L_min,
                            detail=f"{m0.L} <= (1+{params.epsilon})*{rep.L_min}"))
    if method in ("independent", "exact-oracle") and rep.L_min is not None:
        checks.append(Check("allocation-optimal", m0.L == rep.L_min, detail=f"{m0.L} == {rep.L_min}"))
    if rep.L_min is not None:
        checks.append(Check("lower-bound", rep.L_min <= rep.T, detail=f"L_min={rep.L_min} <= T={rep.T}"))
        if rep.T_opt is not None:
            checks.append(Check("lower-bound-opt", rep.L_min <= rep.T_opt, detail=f"{rep.L_min} <= {rep.T_opt}"))

    if rep.L_min is not None:
        rep.lower_bound, rep.lower_bound_kind = rep.L_min, "L_min"
    elif method == "lp":
        rep.lower_bound, rep.lower_bound_kind = rep.L_bar, "L_bar"
    elif method == "fptas":
        rep.lower_bound, rep.lower_bound_kind = max(alloc["fptas_lower"], m0.L / (1 + params.epsilon)), "fptas"
    else:
        rep.lower_bound, rep.lower_bound_kind = m0.L, "L_min"
    g = rep.guaranteed_ratio
    applicable = g is not None and rep.preconditions_hold and cap_exact
    ratio = rep.ratio
    checks.append(Check("ratio", ratio is not None and ratio <= Fraction(g if g is not None else 0),
                        applicable, f"{float(ratio) if ratio is not None else None} <= {g}"))
    if rep.T_opt is not None:
        checks.append(Check("ratio-opt", rep.ratio_opt <= Fraction(g if g is not None else 0), applicable,
                            f"{float(rep.ratio_opt)} <= {g}"))
    return _finish(rep, opts, started)


def _finish(rep: RunReport, opts: RunOptions, started: float) -> RunReport:
    if opts.timing:
        rep.wall_time = time.perf_counter() - started
    return rep


def summarize(reports: Sequence[RunReport]) -> dict:
    ratios = [float(r.ratio) for r in reports if r.ratio is not None]
    return {
        "runs": len(reports),
        "ok": sum(r.ok for r in reports),
        "max_ratio": max(ratios) if ratios else None,
        "mean_ratio": math.fsum(ratios) / len(ratios) if ratios else None,
    }
