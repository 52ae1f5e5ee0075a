"""Instance generators and the JSON instance format.

Every generated execution profile comes from the linear-speedup family
``t(p) = s + sum_i w_i / p_i`` over the types a job uses, which can never
show superlinear speedup; profiles are re-validated anyway.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping

from .core import (
    ExecProfile,
    Instance,
    Job,
    ModelError,
    ResourceProfile,
    format_fraction,
    validate_monotonicity,
)

KINDS = ("random-dag", "sp", "tree", "independent", "lowerbound")
MAX_DENOMINATOR = 1000


class ConfigError(ValueError):
    """The generator configuration cannot be satisfied."""


class InstanceParseError(ModelError):
    """Malformed instance file; the message names the offending field."""


@dataclass(frozen=True)
class GeneratorConfig:
    kind: str
    n: int = 6
    d: int = 2
    cap_min: int = 7
    cap_max: int = 12
    max_alts: int = 4
    seed: int = 0
    M: int | None = None  # lowerbound only
    edge_density: float = 0.35
    # add the capped vector of every alternative for the default mu values,
    # so that the cap step never needs a fallback entry
    closure: bool = True

    def check(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"unknown kind {self.kind!r}; expected one of {KINDS}")
        if self.d < 1:
            raise ConfigError("d must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.kind == "lowerbound":
            if self.M is None or self.M <= 0 or self.M % 3:
                raise ConfigError(f"lowerbound needs M, a positive multiple of 3 (got {self.M})")
            return
        if self.n < 1:
            raise ConfigError("n must be at least 1")
        if self.kind == "sp" and self.n < 2:
            raise ConfigError("an sp composition needs at least two jobs")
        if not 1 <= self.cap_min <= self.cap_max:
            raise ConfigError(f"capacity range [{self.cap_min}, {self.cap_max}] is empty")
        if self.max_alts < 1:
            raise ConfigError("max_alts must be at least 1")
        if not 0 <= self.edge_density <= 1:
            raise ConfigError("edge_density must lie in [0, 1]")


@dataclass(frozen=True)
class LowerBoundBundle:
    instance: Instance
    optimal_priority: tuple[str, ...]
    adversarial_priority: tuple[str, ...]
    M: int = field(default=0, compare=False)

    @property
    def expected_optimal(self) -> int:
        return self.M + self.instance.d - 1

    @property
    def expected_adversarial(self) -> int:
        return self.M * self.instance.d + self.M // 3


# -- execution profiles ------------------------------------------------------


def _snap(t: Fraction) -> Fraction:
    if t.denominator <= MAX_DENOMINATOR:
        return t
    return Fraction(math.ceil(t * MAX_DENOMINATOR), MAX_DENOMINATOR)


def closure_mus(d: int) -> list[Fraction]:
    from .alloc_general import select_parameters

    return sorted({select_parameters(d, c).mu for c in ("general", "sp", "independent")})


def random_profile(rng: random.Random, caps: tuple[int, ...], max_alts: int, mus=()) -> ExecProfile:
    d = len(caps)
    while True:
        support = sorted(rng.sample(range(d), rng.randint(1, d)))
        s = rng.randint(0, 4)
        w = {i: rng.randint(1, 24) for i in support}

        def t_of(alloc):
            return _snap(s + sum((Fraction(w[i], alloc[i]) for i in support), Fraction(0)))

        target = rng.randint(1, max_alts)
        room = math.prod(caps[i] for i in support)
        allocs: set[tuple[int, ...]] = set()
        while len(allocs) < min(target, room):
            allocs.add(tuple(rng.randint(1, caps[i]) if i in w else 0 for i in range(d)))
        for mu in mus:
            bounds = [math.ceil(mu * P) for P in caps]
            allocs |= {tuple(min(a, b) for a, b in zip(alloc, bounds)) for alloc in list(allocs)}
        profile = ExecProfile(tuple((a, t_of(a)) for a in sorted(allocs)))
        if not validate_monotonicity(profile):  # snapping can break it in rare cases
            return profile


def _capacities(rng: random.Random, cfg: GeneratorConfig) -> tuple[int, ...]:
    return tuple(rng.randint(cfg.cap_min, cfg.cap_max) for _ in range(cfg.d))


# -- graph shapes ------------------------------------------------------------


def _layered_edges(rng: random.Random, n: int, density: float) -> list[tuple[int, int]]:
    layers = max(1, round(math.sqrt(n)))
    layer = [rng.randrange(layers) for _ in range(n)]
    return [(a, b) for a in range(n) for b in range(n) if layer[a] < layer[b] and rng.random() < density]


def _sp_edges(rng: random.Random, jobs: list[int]) -> tuple[list[tuple[int, int]], list[int], list[int]]:
    """Random binary composition; returns (edges, sources, sinks)."""
    if len(jobs) == 1:
        return [], jobs[:], jobs[:]
    k = rng.randint(1, len(jobs) - 1)
    e1, src1, snk1 = _sp_edges(rng, jobs[:k])
    e2, src2, snk2 = _sp_edges(rng, jobs[k:])
    if rng.random() < 0.5:
        return e1 + e2 + [(a, b) for a in snk1 for b in src2], src1, snk2
    return e1 + e2, src1 + src2, snk1 + snk2


def _tree_edges(rng: random.Random, n: int) -> list[tuple[int, int]]:
    parent_edges = [(rng.randrange(k), k) for k in range(1, n)]
    if rng.random() < 0.5:
        return parent_edges  # out-tree
    return [(b, a) for a, b in parent_edges]  # in-tree


def generate(cfg: GeneratorConfig) -> Instance | LowerBoundBundle:
    cfg.check()
    if cfg.kind == "lowerbound":
        return lower_bound_bundle(cfg.d, cfg.M)
    rng = random.Random(cfg.seed)
    caps = _capacities(rng, cfg)
    mus = closure_mus(cfg.d) if cfg.closure else ()
    profiles = [random_profile(rng, caps, cfg.max_alts, mus) for _ in range(cfg.n)]
    if cfg.kind == "random-dag":
        edges = _layered_edges(rng, cfg.n, cfg.edge_density)
    elif cfg.kind == "sp":
        edges = _sp_edges(rng, list(range(cfg.n)))[0]
    elif cfg.kind == "tree":
        edges = _tree_edges(rng, cfg.n)
    else:
        edges = []
    width = len(str(cfg.n - 1))
    ids = [f"j{k:0{width}d}" for k in range(cfg.n)]
    jobs = tuple(Job(ids[k], profiles[k]) for k in range(cfg.n))
    return Instance(ResourceProfile(caps), jobs, tuple((ids[a], ids[b]) for a, b in edges))


# -- adversarial family ------------------------------------------------------


def lower_bound_bundle(d: int, M: int) -> LowerBoundBundle:
    """Unit jobs, capacity 2 on every type, one unit of one type per job.

    Types 1..d-1 each form a stage of 2M jobs; one designated job of stage i
    releases all of stage i+1.  The last type is a chain of 2M/3 gadgets of
    three jobs, where only the third job of a gadget releases the next gadget.
    Running the releasing jobs first pipelines everything (M + d - 1); running
    them last serialises the stages and idles one unit per gadget
    (M(d - 1) + 4M/3).
    """
    if d < 1 or M <= 0 or M % 3:
        raise ConfigError("need d >= 1 and M a positive multiple of 3")
    caps = (2,) * d

    def unit(i: int) -> ExecProfile:
        return ExecProfile(((tuple(1 if k == i else 0 for k in range(d)), Fraction(1)),))

    jobs, edges = [], []
    opt, adv = [], []
    release = None  # job that unlocks the next stage
    for i in range(d - 1):
        stage = [f"s{i + 1}_{k}" for k in range(2 * M)]
        jobs += [Job(j, unit(i)) for j in stage]
        if release is not None:
            edges += [(release, j) for j in stage]
        release = stage[0]
        opt += stage
        adv += stage[1:] + stage[:1]
    gadgets = [(f"g{k + 1}_a", f"g{k + 1}_b", f"g{k + 1}_c") for k in range(2 * M // 3)]
    for a, b, c in gadgets:
        jobs += [Job(x, unit(d - 1)) for x in (a, b, c)]
        if release is not None:
            edges += [(release, a), (release, b), (release, c)]
        release = c
        opt += [c, a, b]
    adv += [x for a, b, _ in gadgets for x in (a, b)] + [c for _, _, c in gadgets]
    inst = Instance(ResourceProfile(caps), tuple(jobs), tuple(edges))
    bundle = LowerBoundBundle(inst, tuple(opt), tuple(adv), M)
    check_bundle(bundle)
    return bundle


def check_bundle(bundle: LowerBoundBundle) -> tuple[Fraction, Fraction]:
    """Simulate both priorities and enforce the makespan contract."""
    from .scheduler import PriorityPolicy, list_schedule

    inst = bundle.instance
    assert all(len(p) <= 1 for p in inst.preds), "precedence must be a forest"
    decision = [j.profile.alternatives[0][0] for j in inst.jobs]
    t_opt = list_schedule(inst, decision, PriorityPolicy.explicit(bundle.optimal_priority)).makespan
    t_adv = list_schedule(inst, decision, PriorityPolicy.explicit(bundle.adversarial_priority)).makespan
    if bundle.M:
        if t_opt != bundle.expected_optimal or t_adv != bundle.expected_adversarial:
            raise AssertionError(
                f"lower-bound contract broken: got {t_opt} / {t_adv}, "
                f"expected {bundle.expected_optimal} / {bundle.expected_adversarial}"
            )
    return t_opt, t_adv


# -- serialization -----------------------------------------------------------


def to_json(obj: Instance | LowerBoundBundle) -> dict:
    inst = obj.instance if isinstance(obj, LowerBoundBundle) else obj
    out: dict[str, Any] = {
        "d": inst.d,
        "capacities": list(inst.resources.capacities),
        "jobs": [
            {
                "id": job.id,
                "alternatives": [{"alloc": list(a), "time": format_fraction(t)} for a, t in job.profile.alternatives],
            }
            for job in inst.jobs
        ],
        "edges": [list(e) for e in inst.edges],
    }
    if isinstance(obj, LowerBoundBundle):
        out["optimal_priority"] = list(obj.optimal_priority)
        out["adversarial_priority"] = list(obj.adversarial_priority)
    return out


def dumps(obj: Instance | LowerBoundBundle) -> str:
    """Canonical text: one top-level field per line, one job or edge per line."""

    def enc(v) -> str:
        return json.dumps(v, ensure_ascii=False, separators=(", ", ": "))

    parts = []
    for key, value in to_json(obj).items():
        if isinstance(value, list) and value and isinstance(value[0], (dict, list)):
            body = ",\n".join("  " + enc(v) for v in value)
            parts.append(f"{enc(key)}: [\n{body}\n ]")
        else:
            parts.append(f"{enc(key)}: {enc(value)}")
    return "{\n " + ",\n ".join(parts) + "\n}\n"


def save(obj: Instance | LowerBoundBundle, path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def _int(value, where: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise InstanceParseError(f"{where}: expected an integer, got {value!r}")
    if minimum is not None and value < minimum:
        raise InstanceParseError(f"{where}: must be at least {minimum}, got {value}")
    return value


def _list(value, where: str) -> list:
    if not isinstance(value, list):
        raise InstanceParseError(f"{where}: expected a list, got {type(value).__name__}")
    return value


def _time(value, where: str) -> Fraction:
    if not isinstance(value, str):
        raise InstanceParseError(f"{where}: durations are 'num/den' strings, got {value!r}")
    try:
        t = Fraction(value)
    except (ValueError, ZeroDivisionError):
        raise InstanceParseError(f"{where}: cannot parse duration {value!r}") from None
    return t


def from_json(data: Mapping) -> Instance | LowerBoundBundle:
    if not isinstance(data, Mapping):
        raise InstanceParseError("top level: expected an object")
    for key in ("d", "capacities", "jobs", "edges"):
        if key not in data:
            raise InstanceParseError(f"top level: missing field {key!r}")
    d = _int(data["d"], "d", 1)
    caps = tuple(_int(c, f"capacities[{i}]", 1) for i, c in enumerate(_list(data["capacities"], "capacities")))
    if len(caps) != d:
        raise InstanceParseError(f"capacities: {len(caps)} entries for d={d}")
    jobs = []
    for k, raw in enumerate(_list(data["jobs"], "jobs")):
        where = f"jobs[{k}]"
        if not isinstance(raw, Mapping) or "id" not in raw or "alternatives" not in raw:
            raise InstanceParseError(f"{where}: expected an object with 'id' and 'alternatives'")
        if not isinstance(raw["id"], str):
            raise InstanceParseError(f"{where}.id: expected a string")
        alts = []
        for m, alt in enumerate(_list(raw["alternatives"], f"{where}.alternatives")):
            w = f"{where}.alternatives[{m}]"
            if not isinstance(alt, Mapping) or "alloc" not in alt or "time" not in alt:
                raise InstanceParseError(f"{w}: expected an object with 'alloc' and 'time'")
            alloc = tuple(_int(x, f"{w}.alloc[{i}]") for i, x in enumerate(_list(alt["alloc"], f"{w}.alloc")))
            alts.append((alloc, _time(alt["time"], f"{w}.time")))
        try:
            profile = ExecProfile(tuple(alts))
        except ModelError as exc:
            raise InstanceParseError(f"{where}: {exc}") from None
        jobs.append(Job(raw["id"], profile))
    edges = []
    for k, e in enumerate(_list(data["edges"], "edges")):
        if not isinstance(e, list) or len(e) != 2 or not all(isinstance(x, str) for x in e):
            raise InstanceParseError(f"edges[{k}]: expected a pair of job ids")
        edges.append((e[0], e[1]))
    inst = Instance(ResourceProfile(caps), tuple(jobs), tuple(edges))
    if "optimal_priority" in data or "adversarial_priority" in data:
        opt = tuple(_list(data.get("optimal_priority"), "optimal_priority"))
        adv = tuple(_list(data.get("adversarial_priority"), "adversarial_priority"))
        for name, order in (("optimal_priority", opt), ("adversarial_priority", adv)):
            if sorted(order) != sorted(inst.ids):
                raise InstanceParseError(f"{name}: must list every job id exactly once")
        return LowerBoundBundle(inst, opt, adv)
    return inst


def loads(text: str) -> Instance | LowerBoundBundle:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceParseError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return from_json(data)


def load_any(path) -> Instance | LowerBoundBundle:
    return loads(Path(path).read_text(encoding="utf-8"))


def load(path) -> Instance:
    obj = load_any(path)
    return obj.instance if isinstance(obj, LowerBoundBundle) else obj


def load_bundle(path) -> LowerBoundBundle:
    obj = load_any(path)
    if not isinstance(obj, LowerBoundBundle):
        raise InstanceParseError("file carries no priority orders")
    return obj
