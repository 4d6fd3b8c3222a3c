"""Checks of the four schedule inequalities over grids of parameters.

Each parameter range is checked at its endpoints plus a geometric grid of
interior samples; ``dense=True`` checks every point.  The grid is complete
for these families: in ineq1, ineq5 and ineq6 the worst case reduces to a
ratio of powers of one parameter, which is monotone, and in ineq4 the side
``(x + 1) x^-alpha`` is unimodal with its minimum at ``alpha / (1 - alpha)``,
so the integers next to that point are added to both ranges.

Parameter domains (``lw(k, n) = 2^-k (eta(k)/n)^alpha(k)``):

* ``ineq1``: ``1 <= k < k_max``, ``1 <= n <= eta(k)``:
  ``lw(k, n) < lw(k+1, n)``.
* ``ineq6``: ``d1 <= d2``, ``1 <= k <= eta(d1)``: ``lw(d1, k) >= 2^-d2``.
* ``ineq4``: ``d1 <= d2``, ``2 <= N <= M``, ``N-1 <= eta(d1)``,
  ``M-1 <= eta(d2)``: ``N lw(d1, N-1) <= M lw(d2, M-1)``.
* ``ineq5``: ``d1 <= d2``, ``1 <= k <= eta(d1)``, ``N >= 1``,
  ``N+k-1 <= eta(d2)``: ``lw(d1, k) <= N lw(d2, N+k-1)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Iterator, Sequence

from .errors import RangeError
from .weights import PRECISION_CAP, ExactWeight, Schedule, compare, weight_to_json

INEQUALITIES = ("ineq1", "ineq6", "ineq4", "ineq5")
DENSE_LIMIT = 64


def int_repr(n: int) -> str | int:
    """Compact JSON form for possibly astronomically large integers."""
    if n < (1 << 63):
        return n
    e = n.bit_length() - 1
    d = n - (1 << e)
    if d == 0:
        return f"2^{e}"
    if d < (1 << 32):
        return f"2^{e}+{d}"
    e += 1
    d = (1 << e) - n
    if d < (1 << 32):
        return f"2^{e}-{d}"
    return f"~2^{n.bit_length()}"


def grid(lo: int, hi: int, samples: int = 16, dense: bool = False, extra: Iterable[int] = ()) -> list[int]:
    """Endpoints, geometrically spaced powers of two and ``extra`` in ``[lo, hi]``."""
    if hi < lo:
        return []
    if dense or hi - lo + 1 <= max(DENSE_LIMIT, samples + 2):
        return list(range(lo, hi + 1))
    pts = {lo, hi} | {x for x in extra if lo <= x <= hi}
    a = max(lo, 1).bit_length() - 1
    b = hi.bit_length() - 1
    for j in range(1, samples + 1):
        e = a + ((b - a) * j) // (samples + 1)
        v = 1 << e
        if lo < v < hi:
            pts.add(v)
    return sorted(pts)


@dataclass
class InequalityReport:
    name: str
    checked: int = 0
    failures: list[dict] = field(default_factory=list)
    undecided: list[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures and not self.undecided

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "passed": self.passed,
            "checked": self.checked,
            "failures": self.failures,
            "undecided": self.undecided,
        }


_RELATIONS: dict[str, Callable[[str], bool]] = {
    "<": lambda o: o == "less",
    "<=": lambda o: o in ("less", "equal"),
    ">=": lambda o: o in ("greater", "equal"),
}


def _check(report: InequalityReport, params: dict, lhs: ExactWeight, rel: str, rhs: ExactWeight,
           precision_cap: int, max_failures: int) -> None:
    report.checked += 1
    res = compare(lhs, rhs, precision_cap)
    inst = {k: int_repr(v) for k, v in params.items()}
    if res.order == "undecided":
        inst["precision"] = res.precision
        report.undecided.append(inst)
    elif not _RELATIONS[rel](res.order):
        if len(report.failures) < max_failures:
            inst.update({"lhs": weight_to_json(lhs), "rhs": weight_to_json(rhs), "order": res.order})
            report.failures.append(inst)


def _levels(schedule: Schedule, k_range: Iterable[int] | None) -> list[int]:
    ks = sorted(set(k_range)) if k_range is not None else list(range(1, schedule.k_max + 1))
    for k in ks:
        if not 1 <= k <= schedule.k_max:
            raise RangeError(f"level {k} outside [1, {schedule.k_max}]")
    return ks


def _turning_points(alpha: Fraction) -> set[int]:
    """Integers next to the minimum of ``(x + 1) x^-alpha``."""
    if alpha >= 1:
        return set()
    f = alpha.numerator // (alpha.denominator - alpha.numerator)
    return {f, f + 1}


def _ineq1(s: Schedule, ks, samples, dense, cap, mf) -> InequalityReport:
    rep = InequalityReport("ineq1")
    for k in ks:
        if k + 1 > s.k_max:
            continue
        for n in grid(1, s.eta(k), samples, dense):
            _check(rep, {"k": k, "n": n}, s.level_weight(k, n), "<", s.level_weight(k + 1, n), cap, mf)
    return rep


def _ineq6(s: Schedule, ks, samples, dense, cap, mf) -> InequalityReport:
    rep = InequalityReport("ineq6")
    for d1 in ks:
        for d2 in ks:
            if d2 < d1:
                continue
            rhs = ExactWeight.pow2(-d2)
            for k in grid(1, s.eta(d1), samples, dense):
                _check(rep, {"delta1": d1, "delta2": d2, "k": k}, s.level_weight(d1, k), ">=", rhs, cap, mf)
    return rep


def _ineq4(s: Schedule, ks, samples, dense, cap, mf) -> InequalityReport:
    rep = InequalityReport("ineq4")
    for d1 in ks:
        for d2 in ks:
            if d2 < d1:
                continue
            e1, e2 = s.eta(d1), s.eta(d2)
            crit = _turning_points(s.alpha(d1)) | _turning_points(s.alpha(d2))
            for n1 in grid(1, e1, samples, dense, crit):
                lhs = s.level_weight(d1, n1) * (n1 + 1)
                for m1 in grid(n1, e2, samples, dense, crit):
                    rhs = s.level_weight(d2, m1) * (m1 + 1)
                    _check(rep, {"delta1": d1, "delta2": d2, "N": n1 + 1, "M": m1 + 1}, lhs, "<=", rhs, cap, mf)
    return rep


def _ineq5(s: Schedule, ks, samples, dense, cap, mf) -> InequalityReport:
    rep = InequalityReport("ineq5")
    for d1 in ks:
        for d2 in ks:
            if d2 < d1:
                continue
            e2 = s.eta(d2)
            for k in grid(1, s.eta(d1), samples, dense):
                lhs = s.level_weight(d1, k)
                # t = N + k - 1 ranges over [k, eta(d2)]
                for t in grid(k, e2, samples, dense):
                    rhs = s.level_weight(d2, t) * (t - k + 1)
                    _check(rep, {"delta1": d1, "delta2": d2, "k": k, "N": t - k + 1}, lhs, "<=", rhs, cap, mf)
    return rep


_CHECKERS = {"ineq1": _ineq1, "ineq6": _ineq6, "ineq4": _ineq4, "ineq5": _ineq5}


def verify_inequalities(
    schedule: Schedule,
    k_range: Iterable[int] | None = None,
    samples: int = 16,
    dense: bool = False,
    which: Sequence[str] = INEQUALITIES,
    precision_cap: int = PRECISION_CAP,
    max_failures: int = 5,
) -> dict[str, InequalityReport]:
    ks = _levels(schedule, k_range)
    out = {}
    for name in which:
        if name not in _CHECKERS:
            raise RangeError(f"unknown inequality {name!r}")
        out[name] = _CHECKERS[name](schedule, ks, samples, dense, precision_cap, max_failures)
    return out


def instance_sides(schedule: Schedule, name: str, **p: int) -> tuple[ExactWeight, str, ExactWeight]:
    """``(lhs, relation, rhs)`` of one inequality at explicit parameters."""
    s = schedule
    try:
        if name == "ineq1":
            return s.level_weight(p["k"], p["n"]), "<", s.level_weight(p["k"] + 1, p["n"])
        if name == "ineq6":
            return s.level_weight(p["delta1"], p["k"]), ">=", ExactWeight.pow2(-p["delta2"])
        if name == "ineq4":
            N, M = p["N"], p["M"]
            return s.level_weight(p["delta1"], N - 1) * N, "<=", s.level_weight(p["delta2"], M - 1) * M
        if name == "ineq5":
            k, N = p["k"], p["N"]
            return s.level_weight(p["delta1"], k), "<=", s.level_weight(p["delta2"], N + k - 1) * N
    except KeyError as exc:
        raise RangeError(f"{name} needs parameter {exc}") from exc
    raise RangeError(f"unknown inequality {name!r}")


def check_instance(schedule: Schedule, name: str, precision_cap: int = PRECISION_CAP, **params: int) -> tuple[bool, str]:
    """Whether one instance holds, with the comparison outcome."""
    lhs, rel, rhs = instance_sides(schedule, name, **params)
    order = compare(lhs, rhs, precision_cap).order
    if order == "undecided":
        return False, order
    return _RELATIONS[rel](order), order


def all_pass(reports: dict[str, InequalityReport]) -> bool:
    return all(r.passed for r in reports.values())


def iter_instances(reports: dict[str, InequalityReport]) -> Iterator[tuple[str, dict]]:
    for name, rep in reports.items():
        for f in rep.failures:
            yield name, f
