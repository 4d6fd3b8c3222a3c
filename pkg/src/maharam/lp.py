"""Exact rational simplex for ``max c.x  s.t.  A x <= b, x >= 0`` with ``b >= 0``.

The origin is feasible when ``b >= 0`` so no phase one is needed.  Bland's
rule (least-index entering and leaving variables) guarantees termination.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import PreconditionError


@dataclass(frozen=True)
class LPResult:
    value: Fraction
    x: tuple[Fraction, ...]
    pivots: int


class Unbounded(PreconditionError):
    kind = "unbounded"


def maximize(c: Sequence, A: Sequence[Sequence], b: Sequence) -> LPResult:
    n = len(c)
    m = len(A)
    if any(len(row) != n for row in A) or len(b) != m:
        raise PreconditionError("inconsistent LP dimensions")
    b = [Fraction(v) for v in b]
    if any(v < 0 for v in b):
        raise PreconditionError("right-hand side must be nonnegative")

    # columns 0..n-1 structural, n..n+m-1 slack
    rows = [[Fraction(v) for v in A[i]] + [Fraction(int(i == j)) for j in range(m)] + [b[i]] for i in range(m)]
    obj = [-Fraction(v) for v in c] + [Fraction(0)] * m + [Fraction(0)]
    basis = [n + i for i in range(m)]
    pivots = 0
    while True:
        enter = next((j for j in range(n + m) if obj[j] < 0), None)
        if enter is None:
            break
        leave = None
        best = None
        for i in range(m):
            a = rows[i][enter]
            if a > 0:
                ratio = rows[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            raise Unbounded("objective unbounded above")
        piv_row = rows[leave]
        p = piv_row[enter]
        piv_row = [v / p for v in piv_row]
        rows[leave] = piv_row
        for i in range(m):
            if i != leave:
                f = rows[i][enter]
                if f:
                    row = rows[i]
                    rows[i] = [row[k] - f * piv_row[k] for k in range(n + m + 1)]
        f = obj[enter]
        obj = [obj[k] - f * piv_row[k] for k in range(n + m + 1)]
        basis[leave] = enter
        pivots += 1

    x = [Fraction(0)] * n
    for i, var in enumerate(basis):
        if var < n:
            x[var] = rows[i][-1]
    return LPResult(obj[-1], tuple(x), pivots)
