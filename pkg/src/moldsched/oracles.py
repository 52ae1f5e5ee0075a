"""Brute-force ground truth for small instances.

Budgets are hard limits: exceeding one raises :class:`OracleRefusal`, the
oracles never fall back to heuristics.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from fractions import Fraction

from . import kernels
from .core import Decision, Instance, average_area
from .alloc_general import prune_dominated

ENV_BUDGET = "MOLDSCHED_ORACLE_BUDGET"
ENV_CACHE = "MOLDSCHED_ORACLE_CACHE"  # directory for results that outlive the process


class OracleRefusal(RuntimeError):
    """The instance is too large for the configured oracle budget."""


@dataclass(frozen=True)
class OracleBudget:
    max_decisions: int = 5_000_000
    max_schedule_space: int = 50_000_000  # decisions x orderings for the makespan search
    max_seconds: float | None = None  # advisory only

    @classmethod
    def from_env(cls) -> "OracleBudget":
        """Default budget, overridden by ``MOLDSCHED_ORACLE_BUDGET``.

        The variable holds ``DECISIONS`` or ``DECISIONS,SCHEDULE_SPACE``.
        """
        raw = os.environ.get(ENV_BUDGET)
        if not raw:
            return cls()
        parts = [int(p) for p in raw.split(",")]
        if len(parts) == 1:
            return cls(max_decisions=parts[0])
        return cls(max_decisions=parts[0], max_schedule_space=parts[1])


@dataclass(frozen=True)
class OracleResult:
    L_min: Fraction
    witness: Decision
    space: int


def canonical_key(instance: Instance, *extra) -> str:
    payload = {
        "caps": list(instance.resources.capacities),
        "jobs": [[j.id, [[list(a), str(t)] for a, t in j.profile.alternatives]] for j in instance.jobs],
        "edges": [list(e) for e in instance.edges],
        "extra": [str(x) for x in extra],
    }
    return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()


_CACHE: dict[str, OracleResult] = {}


def clear_cache() -> None:
    _CACHE.clear()


def _disk_get(key: str) -> OracleResult | None:
    root = os.environ.get(ENV_CACHE)
    if not root:
        return None
    path = os.path.join(root, key + ".json")
    try:
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return OracleResult(Fraction(raw["L_min"]), tuple(tuple(a) for a in raw["witness"]), raw["space"])
    except (OSError, ValueError, KeyError):
        return None


def _disk_put(key: str, res: OracleResult) -> None:
    root = os.environ.get(ENV_CACHE)
    if not root:
        return
    os.makedirs(root, exist_ok=True)
    tmp = os.path.join(root, f"{key}.{os.getpid()}.tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump({"L_min": str(res.L_min), "witness": [list(a) for a in res.witness], "space": res.space}, fh)
    os.replace(tmp, os.path.join(root, key + ".json"))


def job_options(instance: Instance, prune: bool = True):
    """Per job, ``(alloc, time, avg_area)`` candidates for exhaustive search."""
    res = instance.resources
    out = []
    for job in instance.jobs:
        if prune:
            out.append(prune_dominated(job.profile, res))
        else:
            out.append([(a, t, average_area(res, a, t)) for a, t in job.profile.alternatives])
    return out


def exact_min_L(
    instance: Instance,
    budget: OracleBudget | None = None,
    prune: bool = True,
    backend: str | None = None,
    use_cache: bool = True,
) -> OracleResult:
    """Minimum of ``max(A(p), C(p))`` over all decisions, with a witness.

    With ``prune`` the search runs over non-dominated allocations only, which
    loses nothing: replacing a dominated entry by one that dominates it can
    only shrink both the area and the critical path.
    """
    budget = budget or OracleBudget.from_env()
    options = job_options(instance, prune)
    space = math.prod(len(o) for o in options)
    if space > budget.max_decisions:
        raise OracleRefusal(f"decision space {space} exceeds budget {budget.max_decisions}")
    key = canonical_key(instance, "minL", prune)
    if use_cache:
        hit = _CACHE.get(key) or _disk_get(key)
        if hit is not None:
            _CACHE[key] = hit
            return hit
    res = instance.resources
    den = kernels.common_denominator(t for opts in options for _, t, _ in opts)
    lcm_p = math.lcm(*res.capacities)
    unit = den * res.d * lcm_p
    opt_ptr, opt_time, opt_area = [0], [], []
    for opts in options:
        for alloc, t, a in opts:
            opt_time.append(int(t * unit))
            opt_area.append(int(a * unit))
            assert opt_time[-1] == t * unit and opt_area[-1] == a * unit
        opt_ptr.append(len(opt_time))
    pred_ptr, pred_idx = kernels.csr(instance.preds)
    upper = sum(max(opt_time[opt_ptr[j]:opt_ptr[j + 1]]) for j in range(instance.n))
    upper += sum(max(opt_area[opt_ptr[j]:opt_ptr[j + 1]]) for j in range(instance.n)) + 1
    mod = kernels.pick(upper, backend)
    best, choice = mod.min_lower_bound(instance.n, list(instance.topo_order), pred_ptr, pred_idx,
                                       opt_ptr, opt_time, opt_area, upper)
    assert choice is not None
    witness = tuple(options[j][choice[j]][0] for j in range(instance.n))
    out = OracleResult(Fraction(best, unit), witness, space)
    if use_cache:
        _CACHE[key] = out
        _disk_put(key, out)
    return out
