"""Dense two-phase simplex over exact rationals.

Small problems only (tens of rows, ~100 columns).  Pivoting uses Bland's
rule, so degenerate problems, which the time-cost relaxation produces in
abundance, terminate.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

ZERO = Fraction(0)


class LPError(ArithmeticError):
    pass


class Infeasible(LPError):
    pass


class Unbounded(LPError):
    pass


@dataclass
class LPResult:
    x: list[Fraction]
    value: Fraction
    pivots: int


def _pivot(rows: list[list[Fraction]], obj: list[Fraction], basis: list[int], r: int, c: int) -> None:
    prow = rows[r]
    piv = prow[c]
    if piv != 1:
        inv = 1 / piv
        prow[:] = [v * inv if v else ZERO for v in prow]
    nz = [k for k, v in enumerate(prow) if v]
    for i, row in enumerate(rows):
        if i != r:
            f = row[c]
            if f:
                for k in nz:
                    row[k] -= f * prow[k]
    f = obj[c]
    if f:
        for k in nz:
            obj[k] -= f * prow[k]
    basis[r] = c


def _run(rows, obj, basis, allowed: int, max_pivots: int) -> int:
    """Minimise the objective row in place; columns >= ``allowed`` never enter."""
    pivots = 0
    while True:
        enter = next((k for k in range(allowed) if obj[k] < 0), None)
        if enter is None:
            return pivots
        best = None
        for i, row in enumerate(rows):
            a = row[enter]
            if a > 0:
                ratio = row[-1] / a
                key = (ratio, basis[i])
                if best is None or key < best[0]:
                    best = (key, i)
        if best is None:
            raise Unbounded("objective is unbounded below")
        _pivot(rows, obj, basis, best[1], enter)
        pivots += 1
        if pivots > max_pivots:
            raise LPError(f"no convergence after {max_pivots} pivots")


def linprog_exact(
    c: Sequence,
    A_ub: Sequence[Sequence] = (),
    b_ub: Sequence = (),
    A_eq: Sequence[Sequence] = (),
    b_eq: Sequence = (),
    max_pivots: int = 100_000,
) -> LPResult:
    """Minimise ``c @ x`` subject to ``A_ub x <= b_ub``, ``A_eq x = b_eq``, ``x >= 0``."""
    n = len(c)
    cons: list[tuple[list[Fraction], Fraction, str]] = []
    for a, b in zip(A_ub, b_ub):
        cons.append(([Fraction(v) for v in a], Fraction(b), "ub"))
    for a, b in zip(A_eq, b_eq):
        cons.append(([Fraction(v) for v in a], Fraction(b), "eq"))
    m = len(cons)
    n_slack = sum(1 for _, _, kind in cons if kind == "ub")
    slack_col = n
    art_col = n + n_slack
    width = art_col  # artificial columns appended below
    rows: list[list[Fraction]] = []
    basis: list[int] = []
    arts: list[int] = []
    layouts = []
    for a, b, kind in cons:
        sign = -1 if b < 0 else 1
        slack = None
        if kind == "ub":
            slack = slack_col
            slack_col += 1
        layouts.append((a, b, sign, slack))
        if kind == "eq" or sign < 0:
            arts.append(len(layouts) - 1)
    total = width + len(arts)
    art_of = {}
    for k, idx in enumerate(arts):
        art_of[idx] = width + k
    for idx, (a, b, sign, slack) in enumerate(layouts):
        row = [ZERO] * (total + 1)
        for k, v in enumerate(a):
            if v:
                row[k] = v * sign
        if slack is not None:
            row[slack] = Fraction(sign)
        row[-1] = b * sign
        if idx in art_of:
            row[art_of[idx]] = Fraction(1)
            basis.append(art_of[idx])
        else:
            basis.append(slack)
        rows.append(row)

    pivots = 0
    if arts:
        obj = [ZERO] * (total + 1)
        for idx in arts:
            for k, v in enumerate(rows[idx]):
                if v:
                    obj[k] -= v
        for k in art_of.values():
            obj[k] = ZERO
        pivots += _run(rows, obj, basis, width, max_pivots)
        if obj[-1] != 0:
            raise Infeasible("phase one ended with positive infeasibility")
        # drive zero-level artificials out of the basis, dropping redundant rows
        keep = []
        for i in range(m):
            if basis[i] >= width:
                col = next((k for k in range(width) if rows[i][k] != 0), None)
                if col is None:
                    continue
                _pivot(rows, obj, basis, i, col)
            keep.append(i)
        rows = [rows[i] for i in keep]
        basis = [basis[i] for i in keep]
    for row in rows:
        del row[width:total]
    obj = [ZERO] * (width + 1)
    for k, v in enumerate(c):
        obj[k] = Fraction(v)
    for i, b in enumerate(basis):
        f = obj[b]
        if f:
            row = rows[i]
            for k, v in enumerate(row):
                if v:
                    obj[k] -= f * v
    pivots += _run(rows, obj, basis, width, max_pivots)
    x = [ZERO] * n
    for i, b in enumerate(basis):
        if b < n:
            x[b] = rows[i][-1]
    value = sum((Fraction(cv) * xv for cv, xv in zip(c, x)), ZERO)
    return LPResult(x, value, pivots)
