"""Exact weights ``sum_t c_t * prod_p p^(e_{t,p})`` and weight schedules.

Every term ``2^r * prod m^(-c)`` (rational ``r, c``) is factored over primes
and split into a rational coefficient times a *residual* ``prod p^f`` with
every ``f`` in ``(0, 1)``.  Distinct residuals are linearly independent over
the rationals, so the map residual -> coefficient is a canonical form:
two weights are equal iff their canonical forms coincide.  Order is decided
by sign of the difference: exactly when all coefficients share a sign,
otherwise by rigorous interval evaluation at doubling precision.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import mpmath
from sympy import factorint, primerange

from .errors import FormatError, PreconditionError, RangeError, UndecidedError

START_PRECISION = 128
PRECISION_CAP = 16384
# integer cross-exponentiation is attempted only below this many bits
CROSS_EXP_BITS = 1 << 20

Residual = tuple[tuple[int, Fraction], ...]


@lru_cache(maxsize=4096)
def _factor(m: int) -> tuple[tuple[int, int], ...]:
    """Prime factorisation; huge cofactors without small factors stay composite.

    An unfactored cofactor only costs canonicity (equal values might then get
    distinct forms and compare as undecided); it never yields a wrong answer.
    """
    if m < 1:
        raise RangeError(f"cannot factor {m}")
    twos = (m & -m).bit_length() - 1
    odd = m >> twos
    out: dict[int, int] = {2: twos} if twos else {}
    if odd > 1:
        if odd.bit_length() <= 96:
            parts = factorint(odd)
        else:
            parts = _small_factors(odd)
        for p, k in parts.items():
            out[p] = out.get(p, 0) + k
    return tuple(sorted(out.items()))


_SMALL_PRIMES = tuple(primerange(3, 1 << 12))
_PRIMORIAL = math.prod(_SMALL_PRIMES)


def _small_factors(m: int) -> dict[int, int]:
    parts: dict[int, int] = {}
    if math.gcd(m, _PRIMORIAL) > 1:
        for p in _SMALL_PRIMES:
            while m % p == 0:
                parts[p] = parts.get(p, 0) + 1
                m //= p
    if m > 1:
        parts[m] = parts.get(m, 0) + 1
    return parts


def _floor_split(e: Fraction) -> tuple[int, Fraction]:
    f = math.floor(e)
    return f, e - f


def _odd_part(n: int) -> tuple[int, int]:
    if n == 0:
        return 0, 0
    t = (n & -n).bit_length() - 1
    return n >> t, t


def _norm(q: Fraction, e: int) -> tuple[Fraction, int]:
    """Write ``q * 2^e`` as ``q' * 2^e'`` with ``q'`` having odd numerator and denominator."""
    if q == 0:
        return Fraction(0), 0
    num, tn = _odd_part(q.numerator)
    den, td = _odd_part(q.denominator)
    if tn == 0 and td == 0:
        return q, e
    return Fraction(num, den), e + tn - td


def _coef_add(c1: tuple[Fraction, int], c2: tuple[Fraction, int]) -> tuple[Fraction, int]:
    (q1, e1), (q2, e2) = c1, c2
    if q1 == 0:
        return c2
    if q2 == 0:
        return c1
    m = min(e1, e2)
    return _norm(q1 * (1 << (e1 - m)) + q2 * (1 << (e2 - m)), m)


def _coef_value(c: tuple[Fraction, int]) -> Fraction:
    q, e = c
    return q * (1 << e) if e >= 0 else q / (1 << -e)


def _mpf_pow2(e: int):
    return mpmath.ldexp(mpmath.mpf(1), e)


# a term is (residual, odd rational, power of two)
Term = tuple[Residual, Fraction, int]


@dataclass(frozen=True)
class ExactWeight:
    """A finite sum of positive-base power products with rational exponents."""

    terms: tuple[Term, ...] = ()

    # -- construction ------------------------------------------------------

    @classmethod
    def _from_dict(cls, d: Mapping[Residual, tuple[Fraction, int]]) -> "ExactWeight":
        return cls(tuple(sorted((k, q, e) for k, (q, e) in d.items() if q != 0)))

    @classmethod
    def zero(cls) -> "ExactWeight":
        return cls(())

    @classmethod
    def rational(cls, q) -> "ExactWeight":
        return cls._from_dict({(): _norm(Fraction(q), 0)})

    @classmethod
    def monomial(cls, exponents: Mapping[int, Fraction], coefficient=1) -> "ExactWeight":
        """``coefficient * prod b^e`` for integer bases ``b >= 1``."""
        primes: dict[int, Fraction] = {}
        for b, e in exponents.items():
            e = Fraction(e)
            if e == 0 or b == 1:
                continue
            for p, k in _factor(int(b)):
                primes[p] = primes.get(p, Fraction(0)) + k * e
        coef, e2 = _norm(Fraction(coefficient), 0)
        residual = []
        for p in sorted(primes):
            whole, frac = _floor_split(primes[p])
            if p == 2:
                e2 += whole
            elif whole >= 0:
                coef *= p**whole
            else:
                coef /= p ** (-whole)
            if frac:
                residual.append((p, frac))
        return cls._from_dict({tuple(residual): (coef, e2)})

    @classmethod
    def term(cls, r, factors: Mapping[int, Fraction] | None = None, coefficient=1) -> "ExactWeight":
        """``coefficient * 2^r * prod m^(-c)`` for ``factors = {m: c}``."""
        exps: dict[int, Fraction] = {2: Fraction(r)}
        for m, c in (factors or {}).items():
            exps[m] = exps.get(m, Fraction(0)) - Fraction(c)
        return cls.monomial(exps, coefficient)

    @classmethod
    def pow2(cls, r) -> "ExactWeight":
        return cls.term(r)

    # -- arithmetic --------------------------------------------------------

    def _dict(self) -> dict[Residual, tuple[Fraction, int]]:
        return {k: (q, e) for k, q, e in self.terms}

    def __add__(self, other):
        if not isinstance(other, ExactWeight):
            other = ExactWeight.rational(other)
        d = self._dict()
        for k, q, e in other.terms:
            d[k] = _coef_add(d[k], (q, e)) if k in d else (q, e)
        return ExactWeight._from_dict(d)

    __radd__ = __add__

    def __neg__(self):
        return ExactWeight(tuple((k, -q, e) for k, q, e in self.terms))

    def __sub__(self, other):
        if not isinstance(other, ExactWeight):
            other = ExactWeight.rational(other)
        return self + (-other)

    def __rsub__(self, other):
        return ExactWeight.rational(other) - self

    def __mul__(self, other):
        if isinstance(other, ExactWeight):
            out = ExactWeight.zero()
            for k1, q1, e1 in self.terms:
                for k2, q2, e2 in other.terms:
                    exps: dict[int, Fraction] = {2: Fraction(e1 + e2)}
                    for p, e in k1 + k2:
                        exps[p] = exps.get(p, Fraction(0)) + e
                    out = out + ExactWeight.monomial(exps, q1 * q2)
            return out
        q, e = _norm(Fraction(other), 0)
        if q == 0:
            return ExactWeight.zero()
        return ExactWeight(tuple((k, q1 * q, e1 + e) for k, q1, e1 in self.terms))

    __rmul__ = __mul__

    # -- inspection --------------------------------------------------------

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_single_term(self) -> bool:
        return len(self.terms) == 1

    def log2_if_pow2(self) -> Fraction | None:
        """``r`` when the weight equals ``2^r`` exactly, else None."""
        if len(self.terms) != 1:
            return None
        residual, q, e = self.terms[0]
        if q != 1 or any(p != 2 for p, _ in residual):
            return None
        return Fraction(e) + sum((f for _, f in residual), Fraction(0))

    def as_rational(self, max_bits: int = 4096) -> Fraction | None:
        """The exact value when rational and of moderate size."""
        if not self.terms:
            return Fraction(0)
        if len(self.terms) == 1 and self.terms[0][0] == () and abs(self.terms[0][2]) <= max_bits:
            return _coef_value(self.terms[0][1:])
        return None

    def interval(self, prec: int = START_PRECISION):
        """Rigorous enclosure ``(lo, hi)`` as mpmath interval endpoints."""
        iv = mpmath.iv
        old = iv.prec
        iv.prec = prec
        try:
            total = iv.mpf(0)
            for residual, q, e in self.terms:
                x = iv.mpf(q.numerator) / iv.mpf(q.denominator)
                x = x * iv.mpf(_mpf_pow2(e))
                if residual:
                    lg = iv.mpf(0)
                    for p, f in residual:
                        lg += iv.log(iv.mpf(p)) * (iv.mpf(f.numerator) / iv.mpf(f.denominator))
                    x = x * iv.exp(lg)
                total += x
            a, b = total._mpi_
            return mpmath.mp.make_mpf(a), mpmath.mp.make_mpf(b)
        finally:
            iv.prec = old

    def approx_log2(self) -> float:
        lo, hi = self.interval(64)
        mid = (mpmath.mpf(lo) + mpmath.mpf(hi)) / 2
        return float(mpmath.log(mid, 2)) if mid > 0 else float("-inf")

    def __float__(self):
        lo, hi = self.interval(64)
        return float((mpmath.mpf(lo) + mpmath.mpf(hi)) / 2)

    def __repr__(self):
        if not self.terms:
            return "ExactWeight(0)"
        parts = []
        for residual, q, e in self.terms:
            s = str(q)
            if e:
                s += f"*2^{e}"
            for p, f in residual:
                s += f"*{p}^({f})"
            parts.append(s)
        return "ExactWeight(" + " + ".join(parts) + ")"

    # -- comparison --------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = ExactWeight.rational(other)
        if not isinstance(other, ExactWeight):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def _order(self, other) -> int:
        res = compare(self, other if isinstance(other, ExactWeight) else ExactWeight.rational(other))
        if res.order == "undecided":
            raise UndecidedError(f"cannot order {self!r} and {other!r}", res.precision)
        return {"less": -1, "equal": 0, "greater": 1}[res.order]

    def __lt__(self, other):
        return self._order(other) < 0

    def __le__(self, other):
        return self._order(other) <= 0

    def __gt__(self, other):
        return self._order(other) > 0

    def __ge__(self, other):
        return self._order(other) >= 0


@dataclass(frozen=True)
class Comparison:
    order: str  # "less" | "equal" | "greater" | "undecided"
    precision: int | None = None
    method: str = "canonical"


def _single_term_sign(t1: Term, t2: Term):
    """Sign of ``t1 - t2`` for positive single terms by cross-exponentiation.

    Raises the ratio to the common exponent denominator ``D``; returns None if
    the integers involved would exceed ``CROSS_EXP_BITS``.
    """
    exps: dict[int, Fraction] = {}
    for p, f in t1[0]:
        exps[p] = exps.get(p, Fraction(0)) + f
    for p, f in t2[0]:
        exps[p] = exps.get(p, Fraction(0)) - f
    q1, q2 = t1[1], t2[1]
    shift = t1[2] - t2[2]
    D = 1
    for f in exps.values():
        D = D * f.denominator // math.gcd(D, f.denominator)
    size = q1.numerator.bit_length() + q1.denominator.bit_length()
    size += q2.numerator.bit_length() + q2.denominator.bit_length() + abs(shift)
    size = D * size + sum(abs(f.numerator) * (D // f.denominator) * p.bit_length() for p, f in exps.items())
    if size > CROSS_EXP_BITS:
        return None
    left = (q1.numerator * q2.denominator) ** D
    right = (q2.numerator * q1.denominator) ** D
    if shift > 0:
        left <<= shift * D
    else:
        right <<= -shift * D
    for p, f in exps.items():
        k = f.numerator * (D // f.denominator)
        if k > 0:
            left *= p**k
        elif k < 0:
            right *= p ** (-k)
    return (left > right) - (left < right)


def compare(a: ExactWeight, b: ExactWeight, precision_cap: int = PRECISION_CAP) -> Comparison:
    """Order two weights.  Undecided (returned, not raised) past ``precision_cap``."""
    d = a - b
    if d.is_zero:
        return Comparison("equal")
    signs = {q > 0 for _, q, _ in d.terms}
    if len(signs) == 1:
        return Comparison("greater" if signs.pop() else "less")
    if len(d.terms) == 2:
        (r1, q1, e1), (r2, q2, e2) = d.terms
        pos, neg = ((r1, q1, e1), (r2, -q2, e2)) if q1 > 0 else ((r2, q2, e2), (r1, -q1, e1))
        s = _single_term_sign(pos, neg)
        if s is not None:
            return Comparison("greater" if s > 0 else "less", method="cross-exponentiation")
    prec = START_PRECISION
    while prec <= precision_cap:
        lo, hi = d.interval(prec)
        if lo > 0:
            return Comparison("greater", prec, "interval")
        if hi < 0:
            return Comparison("less", prec, "interval")
        prec *= 2
    return Comparison("undecided", precision_cap, "interval")


def weight_sum(weights: Iterable[ExactWeight]) -> ExactWeight:
    total = ExactWeight.zero()
    for w in weights:
        total = total + w
    return total


def weight_to_json(w: ExactWeight, bits: int = START_PRECISION) -> dict:
    r = w.log2_if_pow2()
    if r is not None:
        return {"kind": "pow2", "log2": f"{r.numerator}/{r.denominator}"}
    q = w.as_rational()
    if q is not None:
        return {"kind": "rational", "value": f"{q.numerator}/{q.denominator}"}
    lo, hi = w.interval(bits)
    digits = max(10, int(bits * 0.30103) - 2)
    return {
        "kind": "interval",
        "lo": _decimal(_mpf_fraction(lo), digits, up=False),
        "hi": _decimal(_mpf_fraction(hi), digits, up=True),
        "bits": bits,
    }


def _mpf_fraction(x) -> Fraction:
    """Exact value of an mpf; reads the raw tuple so no rounding happens."""
    sign, man, exp, _ = x._mpf_
    f = Fraction(man) * Fraction(2) ** exp
    return -f if sign else f


def _decimal(x: Fraction, digits: int, up: bool) -> str:
    """Scientific notation with ``digits`` significant digits, rounded outward."""
    if x == 0:
        return "0"
    sign = "-" if x < 0 else ""
    ax = abs(x)
    e = len(str(ax.numerator)) - len(str(ax.denominator))
    if Fraction(10) ** e > ax:
        e -= 1
    scaled = ax * Fraction(10) ** (digits - 1 - e)
    away = up != (x < 0)
    m = math.ceil(scaled) if away else math.floor(scaled)
    if len(str(m)) > digits:
        m //= 10
        e += 1
        if away and m * 10 < scaled:
            m += 1
    t = str(m)
    return f"{sign}{t[0]}.{t[1:]}e{e:+d}"


# ---------------------------------------------------------------------------
# schedules


TALAGRAND_K_MAX = 6


@dataclass(frozen=True)
class Schedule:
    """The pair ``(eta, alpha)``.

    ``kind == "talagrand"``: ``eta(k) = 2^(2500 k^4)`` (kept as its exponent)
    and ``alpha(k) = (k + 5)^-3`` for ``k <= k_max``.  ``kind == "table"``:
    explicit lists, ``eta[k-1]`` and ``alpha[k-1]``.
    """

    kind: str
    eta_table: tuple[int, ...] = ()
    alpha_table: tuple[Fraction, ...] = ()
    k_max: int = TALAGRAND_K_MAX

    def __post_init__(self):
        if self.kind == "talagrand":
            return
        if self.kind != "table":
            raise FormatError(f"unknown schedule kind {self.kind!r}")
        eta = tuple(int(x) for x in self.eta_table)
        alpha = tuple(Fraction(x) for x in self.alpha_table)
        if not eta or len(eta) != len(alpha):
            raise FormatError("eta and alpha tables must be nonempty and of equal length")
        if any(x < 1 for x in eta):
            raise FormatError("eta values must be positive integers")
        if any(b <= a for a, b in zip(eta, eta[1:])):
            raise FormatError("eta must be strictly increasing")
        if any(not 0 < a <= 1 for a in alpha):
            raise FormatError("alpha values must lie in (0, 1]")
        object.__setattr__(self, "eta_table", eta)
        object.__setattr__(self, "alpha_table", alpha)
        object.__setattr__(self, "k_max", len(eta))

    @classmethod
    def talagrand(cls, k_max: int = TALAGRAND_K_MAX) -> "Schedule":
        return cls("talagrand", k_max=k_max)

    @classmethod
    def table(cls, eta: Sequence[int], alpha: Sequence) -> "Schedule":
        return cls("table", tuple(eta), tuple(Fraction(a) for a in alpha))

    def _check_level(self, k: int) -> None:
        if not 1 <= k <= self.k_max:
            raise RangeError(f"level {k} outside [1, {self.k_max}]")

    def eta_log2(self, k: int) -> Fraction | None:
        """``log2 eta(k)`` when ``eta(k)`` is a power of two."""
        self._check_level(k)
        if self.kind == "talagrand":
            return Fraction(2500 * k**4)
        e = self.eta_table[k - 1]
        return Fraction(e.bit_length() - 1) if e & (e - 1) == 0 else None

    def eta(self, k: int) -> int:
        self._check_level(k)
        if self.kind == "talagrand":
            return 1 << (2500 * k**4)
        return self.eta_table[k - 1]

    def eta_at_least(self, k: int, m: int) -> bool:
        """``eta(k) >= m`` without materialising huge powers."""
        if self.kind == "talagrand":
            return m <= 1 or (m - 1).bit_length() <= 2500 * k**4
        return self.eta(k) >= m

    def alpha(self, k: int) -> Fraction:
        self._check_level(k)
        if self.kind == "talagrand":
            return Fraction(1, (k + 5) ** 3)
        return self.alpha_table[k - 1]

    def delta(self, m: int, k_limit: int | None = None) -> int:
        """Least ``n`` with ``eta(n) >= m`` (searching levels up to ``k_limit``)."""
        if m < 1:
            raise RangeError("delta is defined for positive integers")
        top = self.k_max if k_limit is None else min(k_limit, self.k_max)
        for n in range(1, top + 1):
            if self.eta_at_least(n, m):
                return n
        raise RangeError(f"{m} exceeds eta({top})")

    def level_weight(self, k: int, n: int) -> ExactWeight:
        """``2^-k (eta(k) / n)^alpha(k)``."""
        a = self.alpha(k)
        lg = self.eta_log2(k)
        if lg is not None:
            return ExactWeight.term(-k + a * lg, {n: a})
        exps: dict[int, Fraction] = {2: Fraction(-k)}
        for m, e in ((self.eta(k), a), (n, -a)):
            exps[m] = exps.get(m, Fraction(0)) + e
        return ExactWeight.monomial(exps)

    def weight(self, n: int) -> ExactWeight:
        """``w(n) = 2^-delta(n) (eta(delta(n)) / n)^alpha(delta(n))``."""
        return self.level_weight(self.delta(n), n)

    def member_weight(self, n: int, k_limit: int | None = None) -> ExactWeight:
        """Least weight a ``D``-set with ``|I| = n`` carries over levels ``<= k_limit``.

        Equals :meth:`weight` whenever level weights grow with ``k``.
        """
        top = self.k_max if k_limit is None else min(k_limit, self.k_max)
        best = None
        for k in range(self.delta(n, top), top + 1):
            w = self.level_weight(k, n)
            if best is None or w < best:
                best = w
        return best

    def to_json(self) -> dict:
        if self.kind == "talagrand":
            return {"kind": "talagrand", "k_max": self.k_max}
        return {
            "kind": "table",
            "eta": list(self.eta_table),
            "alpha": [f"{a.numerator}/{a.denominator}" for a in self.alpha_table],
        }

    @classmethod
    def from_json(cls, obj) -> "Schedule":
        if not isinstance(obj, Mapping) or "kind" not in obj:
            raise FormatError("schedule JSON needs a 'kind'")
        if obj["kind"] == "talagrand":
            return cls.talagrand(int(obj.get("k_max", TALAGRAND_K_MAX)))
        if obj["kind"] == "table":
            try:
                return cls.table([int(x) for x in obj["eta"]], [Fraction(str(a)) for a in obj["alpha"]])
            except (KeyError, ValueError, ZeroDivisionError) as exc:
                raise FormatError(f"bad table schedule: {exc}") from exc
        raise FormatError(f"unknown schedule kind {obj['kind']!r}")


def require_decided(res: Comparison) -> Comparison:
    if res.order == "undecided":
        raise UndecidedError("comparison undecided at precision cap", res.precision)
    return res


def psi_total(schedule: Schedule) -> ExactWeight:
    """Closed form of the measure of the whole space: ``eta(1)^alpha(1) = 2 w(1)``."""
    return schedule.weight(1) * 2


def psi_cylinder(schedule: Schedule, size: int) -> ExactWeight:
    """Closed form for a basic cylinder ``[s]`` with ``|dom s| = size``.

    ``min{2^(-delta+1), w(size)}`` with ``delta = delta(size)``.
    """
    if size < 1:
        raise PreconditionError("a prefix with empty domain is the whole space; use psi_total")
    d = schedule.delta(size)
    a = ExactWeight.pow2(1 - d)
    b = schedule.weight(size)
    res = require_decided(compare(a, b))
    return b if res.order == "greater" else a


def check_precision(bits: int) -> int:
    if bits < START_PRECISION:
        raise PreconditionError(f"precision cap must be at least {START_PRECISION} bits")
    return bits
