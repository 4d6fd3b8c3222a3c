"""Fraction-free Gaussian elimination over the integers and rationals."""

from __future__ import annotations

from fractions import Fraction
from math import lcm
from typing import Sequence

from .errors import FormatError, PreconditionError


def _square(M: Sequence[Sequence]) -> int:
    n = len(M)
    for row in M:
        if len(row) != n:
            raise FormatError("matrix is not square")
    return n


def _integral_rows(M: Sequence[Sequence]) -> tuple[list[list[int]], list[int]]:
    """Scale each row to integers; returns the rows and the row scale factors."""
    rows, scales = [], []
    for row in M:
        fr = [Fraction(x) for x in row]
        d = lcm(*(x.denominator for x in fr)) if fr else 1
        rows.append([int(x * d) for x in fr])
        scales.append(d)
    return rows, scales


def bareiss_det(M: Sequence[Sequence]) -> Fraction:
    """Exact determinant by Bareiss elimination with row pivoting."""
    n = _square(M)
    if n == 0:
        return Fraction(1)
    a, scales = _integral_rows(M)
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            p = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if p is None:
                return Fraction(0)
            a[k], a[p] = a[p], a[k]
            sign = -sign
        akk = a[k][k]
        rk = a[k]
        for i in range(k + 1, n):
            ri = a[i]
            aik = ri[k]
            for j in range(k + 1, n):
                ri[j] = (akk * ri[j] - aik * rk[j]) // prev
            ri[k] = 0
        prev = akk
    det = Fraction(sign * a[n - 1][n - 1])
    for s in scales:
        det /= s
    return det


def solve(M: Sequence[Sequence], b: Sequence) -> list[Fraction]:
    """Unique solution of ``M x = b``; raises if ``M`` is singular."""
    n = _square(M)
    if len(b) != n:
        raise FormatError("right-hand side has the wrong length")
    aug = [list(row) + [rhs] for row, rhs in zip(M, b)]
    a, _ = _integral_rows(aug)
    prev = 1
    for k in range(n):
        if a[k][k] == 0:
            p = next((i for i in range(k + 1, n) if a[i][k] != 0), None)
            if p is None:
                raise PreconditionError("singular matrix")
            a[k], a[p] = a[p], a[k]
        akk = a[k][k]
        rk = a[k]
        for i in range(k + 1, n):
            ri = a[i]
            aik = ri[k]
            for j in range(k + 1, n + 1):
                ri[j] = (akk * ri[j] - aik * rk[j]) // prev
            ri[k] = 0
        prev = akk
    x: list[Fraction] = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        s = Fraction(a[i][n])
        for j in range(i + 1, n):
            if a[i][j]:
                s -= a[i][j] * x[j]
        x[i] = s / a[i][i]
    return x


def mat_vec(M: Sequence[Sequence], x: Sequence) -> list[Fraction]:
    return [sum((Fraction(m) * v for m, v in zip(row, x)), Fraction(0)) for row in M]
