"""Allocation for series-parallel graphs (FPTAS) and independent jobs (exact).

Series-parallel here means vertex series-parallel on the transitive closure:
a set of jobs splits in parallel when its comparability graph is
disconnected, and in series when a prefix of a topological order precedes
every remaining job.  Each job is a leaf exactly once.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import permutations

from .alloc_general import prune_dominated
from .core import Decision, Instance, aggregate_metrics


class NotSeriesParallel(ValueError):
    """The precedence order contains an induced N: a<c, a<d, b<d, b and c unrelated."""

    def __init__(self, witness: tuple[str, str, str, str]):
        self.witness = witness
        a, b, c, d = witness
        super().__init__(f"not series-parallel: {a}->{c}, {a}->{d}, {b}->{d} with {b}, {c} unrelated")


@dataclass(frozen=True)
class SpNode:
    kind: str  # "leaf" | "series" | "parallel"
    jobs: frozenset[int]
    job: int | None = None
    left: "SpNode | None" = None
    right: "SpNode | None" = None

    def leaves(self) -> list[int]:
        if self.kind == "leaf":
            return [self.job]
        return self.left.leaves() + self.right.leaves()

    def order_pairs(self) -> set[tuple[int, int]]:
        """Precedence pairs generated by the composition (the transitive closure)."""
        if self.kind == "leaf":
            return set()
        out = self.left.order_pairs() | self.right.order_pairs()
        if self.kind == "series":
            out |= {(a, b) for a in self.left.jobs for b in self.right.jobs}
        return out

    def describe(self, ids) -> str:
        if self.kind == "leaf":
            return ids[self.job]
        op = " ; " if self.kind == "series" else " | "
        return f"({self.left.describe(ids)}{op}{self.right.describe(ids)})"


@dataclass(frozen=True)
class SpDecomposition:
    root: SpNode
    instance: Instance


def reachability(instance: Instance) -> list[set[int]]:
    reach: list[set[int]] = [set() for _ in range(instance.n)]
    for k in reversed(instance.topo_order):
        for s in instance.succs[k]:
            reach[k].add(s)
            reach[k] |= reach[s]
    return reach


def _components(jobs: list[int], comparable) -> list[list[int]]:
    seen: set[int] = set()
    out = []
    for start in jobs:
        if start in seen:
            continue
        comp, stack = [], [start]
        seen.add(start)
        while stack:
            u = stack.pop()
            comp.append(u)
            for v in jobs:
                if v not in seen and comparable(u, v):
                    seen.add(v)
                    stack.append(v)
        out.append(sorted(comp))
    return out


def _find_n(jobs: list[int], reach: list[set[int]]) -> tuple[int, int, int, int] | None:
    for a, b, c, d in permutations(jobs, 4):
        if c in reach[a] and d in reach[a] and d in reach[b] and c not in reach[b]:
            if b not in reach[a] and a not in reach[b] and c not in reach[d] and d not in reach[c]:
                return a, b, c, d
    return None


def recognize_sp(instance: Instance) -> SpDecomposition:
    """Binary decomposition tree, or :class:`NotSeriesParallel` with an N witness."""
    reach = reachability(instance)
    position = {k: r for r, k in enumerate(instance.topo_order)}

    def comparable(u: int, v: int) -> bool:
        return v in reach[u] or u in reach[v]

    def build(jobs: list[int]) -> SpNode:
        if len(jobs) == 1:
            return SpNode("leaf", frozenset(jobs), job=jobs[0])
        comps = _components(jobs, comparable)
        if len(comps) > 1:
            node = build(comps[-1])
            for comp in reversed(comps[:-1]):
                left = build(comp)
                node = SpNode("parallel", left.jobs | node.jobs, left=left, right=node)
            return node
        order = sorted(jobs, key=position.__getitem__)
        for cut in range(1, len(order)):
            head, tail = order[:cut], order[cut:]
            if all(t in reach[h] for h in head for t in tail):
                left, right = build(sorted(head)), build(sorted(tail))
                return SpNode("series", left.jobs | right.jobs, left=left, right=right)
        witness = _find_n(order, reach)
        assert witness is not None, "connected, series-indecomposable order without an N"
        raise NotSeriesParallel(tuple(instance.ids[k] for k in witness))

    if instance.n == 0:
        raise ValueError("empty instance")
    return SpDecomposition(build(list(range(instance.n))), instance)


def is_series_parallel(instance: Instance) -> bool:
    try:
        recognize_sp(instance)
    except NotSeriesParallel:
        return False
    return True


# -- Pareto frontiers --------------------------------------------------------


@dataclass(frozen=True)
class FrontierPoint:
    C: Fraction
    A: Fraction  # snapped area when a grid is in use
    origin: tuple  # leaf: (alloc,), merge: (left point, right point)


def _pareto(points: list[FrontierPoint]) -> list[FrontierPoint]:
    points.sort(key=lambda p: (p.C, p.A))
    out = []
    for p in points:
        if not out or p.A < out[-1].A:
            out.append(p)
    return out


@dataclass(frozen=True)
class ParetoFrontier:
    points: tuple[FrontierPoint, ...]
    delta: Fraction  # grid step on the area axis; 0 means exact


def frontier(decomp: SpDecomposition, delta: Fraction = Fraction(0), c_max=None, a_max=None) -> ParetoFrontier:
    """Non-dominated ``(C, A)`` pairs of the whole graph.

    With ``delta > 0`` every job's average area is rounded up to a multiple of
    ``delta``; pairs beyond ``c_max`` or ``a_max`` are dropped early since both
    coordinates only grow under composition.
    """
    inst = decomp.instance
    options = {}

    def snap(a: Fraction) -> Fraction:
        return a if not delta else math.ceil(a / delta) * delta

    def keep(p: FrontierPoint) -> bool:
        return (c_max is None or p.C <= c_max) and (a_max is None or p.A <= a_max)

    def walk(node: SpNode) -> list[FrontierPoint]:
        if node.kind == "leaf":
            job = inst.jobs[node.job]
            if node.job not in options:
                options[node.job] = prune_dominated(job.profile, inst.resources)
            pts = [FrontierPoint(t, snap(a), (alloc,)) for alloc, t, a in options[node.job]]
            return _pareto([p for p in pts if keep(p)])
        left, right = walk(node.left), walk(node.right)
        merged = []
        for p in left:
            for q in right:
                C = p.C + q.C if node.kind == "series" else max(p.C, q.C)
                pt = FrontierPoint(C, p.A + q.A, (p, q))
                if keep(pt):
                    merged.append(pt)
        return _pareto(merged)

    return ParetoFrontier(tuple(walk(decomp.root)), Fraction(delta))


def _decision_of(decomp: SpDecomposition, point: FrontierPoint) -> Decision:
    out: dict[int, tuple] = {}

    def walk(node: SpNode, pt: FrontierPoint) -> None:
        if node.kind == "leaf":
            out[node.job] = pt.origin[0]
        else:
            walk(node.left, pt.origin[0])
            walk(node.right, pt.origin[1])

    walk(decomp.root, point)
    return tuple(out[k] for k in range(decomp.instance.n))


def exact_sp_allocate(decomp: SpDecomposition) -> Decision:
    """Exact ``L``-minimising decision from the full frontier (no grid)."""
    front = frontier(decomp)
    best = min(front.points, key=lambda p: (max(p.C, p.A), p.C))
    return _decision_of(decomp, best)


@dataclass(frozen=True)
class FptasResult:
    decision: Decision
    L: Fraction
    lower: Fraction  # proven lower bound on L_min
    probes: int


def fptas_allocate(instance: Instance, decomp: SpDecomposition | None = None, eps=Fraction(1, 10)) -> FptasResult:
    """Decision with ``L(p) <= (1 + eps) * L_min`` on a series-parallel graph.

    The test for a target ``X`` snaps areas to ``delta = eps1 * X / n`` and
    accepts when some pair has ``C <= X`` and snapped area at most
    ``(1 + eps1) X``.  Snapping adds less than ``n * delta`` to any total, so
    ``L_min <= X`` always passes, and a pass yields ``L <= (1 + eps1) X``.
    Bisecting ``X`` to relative width ``eps1`` with ``(1 + eps1)^2 <= 1 + eps``
    gives the guarantee.  ``eps = 0`` computes the exact frontier instead.
    """
    eps = Fraction(eps)
    if eps < 0:
        raise ValueError("eps must be non-negative")
    decomp = decomp or recognize_sp(instance)
    n = instance.n
    if eps == 0 or n == 1:
        dec = exact_sp_allocate(decomp)
        L = aggregate_metrics(instance, dec).L
        return FptasResult(dec, L, L, 0)
    eps1 = min(eps / 3, Fraction(1, 3))
    opts = [prune_dominated(j.profile, instance.resources) for j in instance.jobs]
    lo = max(max(min(t for _, t, _ in o) for o in opts), sum((min(a for _, _, a in o) for o in opts), Fraction(0)))
    fastest = tuple(o[0][0] for o in opts)
    best_dec = fastest
    best_L = hi = aggregate_metrics(instance, fastest).L
    probes = 0

    def test(X: Fraction):
        delta = eps1 * X / n
        front = frontier(decomp, delta, c_max=X, a_max=(1 + eps1) * X)
        if not front.points:
            return None
        return _decision_of(decomp, min(front.points, key=lambda p: (max(p.C, p.A), p.C)))

    while hi > (1 + eps1) * lo:
        mid = (lo + hi) / 2
        probes += 1
        dec = test(mid)
        if dec is None:
            lo = mid  # no decision reaches L <= mid
        else:
            hi = mid
            L = aggregate_metrics(instance, dec).L
            assert L <= (1 + eps1) * mid
            if L < best_L:
                best_dec, best_L = dec, L
    return FptasResult(best_dec, best_L, lo, probes)


# -- independent jobs --------------------------------------------------------


def allocate_independent(instance: Instance) -> Decision:
    """Exact minimiser of ``max(max_j t_j, A)`` when there are no edges.

    For every candidate bound on the longest job, each job takes its
    smallest-area alternative within the bound; the best candidate wins.
    The optimum's own longest time is one of the candidates, and there the
    sweep's area is no larger, so the result is optimal.
    """
    if instance.edges:
        raise ValueError("allocate_independent requires an instance without edges")
    opts = [prune_dominated(j.profile, instance.resources) for j in instance.jobs]
    taus = sorted({t for o in opts for _, t, _ in o})
    best = None
    for tau in taus:
        picks = []
        for o in opts:
            within = [(a, t, alloc) for alloc, t, a in o if t <= tau]
            if not within:
                break
            picks.append(min(within))
        else:
            longest = max(t for _, t, _ in picks)
            total = sum((a for a, _, _ in picks), Fraction(0))
            key = max(longest, total)
            if best is None or key < best[0]:
                best = (key, tuple(alloc for _, _, alloc in picks))
    assert best is not None
    return best[1]
