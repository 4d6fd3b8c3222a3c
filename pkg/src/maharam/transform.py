"""Signed measures associated to functionals on finite Boolean algebras.

``sfr(n)`` is the power set of the nonempty subsets of ``[n]``.  Its atoms are
the nonempty ``y <= [n]``, enumerated by size and then lexicographically (the
*canonical* order), and an element is a bitmask over atom positions.  The
``*``-free generators are ``a_i = {y : i in y}``.

A functional ``mu`` on an ``n``-atom algebra is sent along the good map
``atom i -> a_i`` and the unique additive ``lam`` on ``sfr(n)`` with
``lam(f(a)) = mu(a)`` is found by exact elimination on the incidence matrix.

The second half of the module handles the explicit product-space map:
level sets ``T_i``, the map on cylinders and generator sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, prod
from typing import Callable, Iterable, Mapping, Sequence

from . import linalg
from .algebra import Element, FiniteAlgebra, atoms_of, check_size, is_partition
from .errors import FormatError, PreconditionError, RangeError
from .submeasure import Submeasure, validate

INCIDENCE_MAX_N = 12
SOLVE_MAX_N = 8
LEVEL_CAP = 1 << 20


# ---------------------------------------------------------------- sfr(n)


def subset_label(mask: int) -> str:
    return "[" + ",".join(str(i) for i in atoms_of(mask)) + "]"


def canonical_subsets(n: int) -> list[int]:
    """Nonempty subsets of ``[n]`` as bitmasks, by size then lexicographic."""
    return sorted(range(1, 1 << n), key=lambda m: (bin(m).count("1"), atoms_of(m)))


def recursive_subsets(n: int) -> list[int]:
    """Order used by the inductive matrix construction: ``R, {n}, R + n``."""
    order = [1]
    for k in range(1, n):
        top = 1 << k
        order = order + [top] + [y | top for y in order]
    return order


@dataclass(frozen=True)
class StarFreeAlgebra:
    n: int
    subsets: tuple[int, ...] = field(init=False, repr=False)
    position: dict = field(init=False, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self.n < 1:
            raise RangeError("sfr(n) needs n >= 1")
        check_size(self.n, INCIDENCE_MAX_N, "generators")
        subs = tuple(canonical_subsets(self.n))
        object.__setattr__(self, "subsets", subs)
        object.__setattr__(self, "position", {y: p for p, y in enumerate(subs)})

    @property
    def n_atoms(self) -> int:
        return len(self.subsets)

    @property
    def algebra(self) -> FiniteAlgebra:
        return FiniteAlgebra(self.n_atoms)

    @property
    def one(self) -> Element:
        return (1 << self.n_atoms) - 1

    def atom(self, y: int) -> Element:
        return 1 << self.position[y]

    def generator(self, i: int) -> Element:
        if not 1 <= i <= self.n:
            raise RangeError(f"generator {i} outside [1, {self.n}]")
        bit = 1 << (i - 1)
        return sum(1 << p for p, y in enumerate(self.subsets) if y & bit)

    def generators(self) -> list[Element]:
        return [self.generator(i) for i in range(1, self.n + 1)]

    def meets(self, q: int) -> Element:
        """``union of a_i for i in q`` = atoms ``y`` with ``y & q != 0``."""
        return sum(1 << p for p, y in enumerate(self.subsets) if y & q)

    def labels(self) -> list[str]:
        return [subset_label(y) for y in self.subsets]


# ---------------------------------------------------------------- *-freeness


@dataclass(frozen=True)
class StarFreeCheck:
    passed: bool
    witness: tuple[int, ...] | None = None
    reason: str | None = None

    def to_json(self) -> dict:
        out: dict = {"passed": self.passed}
        if not self.passed:
            out["reason"] = self.reason
            out["witness"] = list(self.witness) if self.witness is not None else None
        return out


def star_free_check(one: Element, elements: Sequence[Element]) -> StarFreeCheck:
    """Every meet pattern of ``elements`` is nonzero and their union is ``one``."""
    k = len(elements)
    if k == 0:
        return StarFreeCheck(False, None, "empty family")
    union = 0
    for e in elements:
        union |= e
    if union != one:
        return StarFreeCheck(False, None, "union")
    for J in canonical_subsets(k):
        m = one
        for j, e in enumerate(elements):
            m &= e if J >> j & 1 else ~e
            if not m:
                break
        if not m:
            return StarFreeCheck(False, atoms_of(J), "empty pattern")
    return StarFreeCheck(True)


# ---------------------------------------------------------------- incidence


def _incidence(order: Sequence[int]) -> list[list[int]]:
    return [[1 if y & z else 0 for z in order] for y in order]


def incidence_matrix(n: int, order: str = "canonical") -> list[list[int]]:
    """``A[y][z] = 1`` iff ``y`` and ``z`` meet, over nonempty subsets of ``[n]``."""
    if n < 1:
        raise RangeError("n must be at least 1")
    check_size(n, INCIDENCE_MAX_N, "generators")
    if order == "canonical":
        return _incidence(canonical_subsets(n))
    if order == "recursive":
        return _incidence(recursive_subsets(n))
    raise FormatError(f"unknown order {order!r}")


def incidence_by_blocks(n: int) -> list[list[int]]:
    """Recursive-order matrix assembled as ``[[A,0,A],[0,1,1],[A,1,J]]``."""
    if n < 1:
        raise RangeError("n must be at least 1")
    check_size(n, INCIDENCE_MAX_N, "generators")
    A = [[1]]
    for _ in range(1, n):
        m = len(A)
        zero, one = [0] * m, [1] * m
        top = [row + [0] + row for row in A]
        mid = [zero + [1] + one]
        bot = [row + [1] + one for row in A]
        A = top + mid + bot
    return A


def incidence_determinant(n: int) -> Fraction:
    return linalg.bareiss_det(incidence_matrix(n))


# ---------------------------------------------------------------- signed measures


@dataclass(frozen=True)
class SignedMeasure:
    """Additive set function given by its (possibly negative) atom values."""

    atom_values: tuple[Fraction, ...]
    labels: tuple[str, ...] | None = None

    @property
    def n_atoms(self) -> int:
        return len(self.atom_values)

    def __call__(self, a: Element) -> Fraction:
        total = Fraction(0)
        p = 0
        while a:
            if a & 1:
                total += self.atom_values[p]
            a >>= 1
            p += 1
        return total

    def is_nonnegative(self) -> bool:
        return all(v >= 0 for v in self.atom_values)

    def __add__(self, other: "SignedMeasure") -> "SignedMeasure":
        return SignedMeasure(tuple(x + y for x, y in zip(self.atom_values, other.atom_values)), self.labels)

    def scaled(self, c) -> "SignedMeasure":
        c = Fraction(c)
        return SignedMeasure(tuple(c * x for x in self.atom_values), self.labels)

    def to_json(self) -> dict:
        labels = self.labels or tuple(f"[{p + 1}]" for p in range(self.n_atoms))
        return {"atoms": {lab: _q(v) for lab, v in zip(labels, self.atom_values)}}


def _q(v: Fraction) -> str:
    return f"{v.numerator}/{v.denominator}"


def _functional_values(mu, n: int | None) -> tuple[int, list[Fraction]]:
    """Normalise a functional to ``(n, values indexed by element)``."""
    if isinstance(mu, Submeasure):
        return mu.n_atoms, list(mu.values)
    if isinstance(mu, Mapping):
        if n is None:
            raise FormatError("atom count required for a mapping functional")
        vals = [Fraction(0)] * (1 << n)
        for q in range(1, 1 << n):
            if q not in mu:
                raise FormatError(f"value missing for {subset_label(q)}")
            vals[q] = Fraction(mu[q])
        if mu.get(0, 0) != 0:
            raise FormatError("functional must vanish at 0")
        return n, vals
    vals = [Fraction(x) for x in mu]
    k = len(vals).bit_length() - 1
    if len(vals) != 1 << k or k < 1 or (n is not None and n != k):
        raise FormatError("functional table length must be 2^n")
    if vals[0] != 0:
        raise FormatError("functional must vanish at 0")
    return k, vals


def solve_signed_measure(mu, n: int | None = None) -> SignedMeasure:
    """The unique ``lam`` on ``sfr(n)`` with ``lam(union a_i, i in q) = mu(q)``."""
    n, vals = _functional_values(mu, n)
    check_size(n, SOLVE_MAX_N, "atoms for exact solving")
    sfr = StarFreeAlgebra(n)
    A = incidence_matrix(n)
    x = linalg.solve(A, [vals[q] for q in sfr.subsets])
    return SignedMeasure(tuple(x), tuple(sfr.labels()))


@dataclass(frozen=True)
class GoodMap:
    """Atom ``i`` of an ``n``-atom algebra goes to the ``i``-th generator of ``sfr(n)``."""

    target: StarFreeAlgebra
    atom_images: tuple[Element, ...]

    @classmethod
    def canonical(cls, n: int) -> "GoodMap":
        sfr = StarFreeAlgebra(n)
        return cls(sfr, tuple(sfr.generators()))

    @property
    def source(self) -> FiniteAlgebra:
        return FiniteAlgebra(len(self.atom_images))

    def __call__(self, a: Element) -> Element:
        out = 0
        for i in atoms_of(a):
            out |= self.atom_images[i - 1]
        return out


def round_trip_errors(mu, lam: SignedMeasure, n: int | None = None) -> list[int]:
    """Elements ``a`` with ``lam(f(a)) != mu(a)``."""
    n, vals = _functional_values(mu, n)
    f = GoodMap.canonical(n)
    return [a for a in range(1 << n) if lam(f(a)) != vals[a]]


@dataclass(frozen=True)
class UnboundedExample:
    mu: Submeasure
    lam: SignedMeasure
    element: Element
    value: Fraction


def unbounded_example(n: int) -> UnboundedExample:
    """``mu = 1/2`` off ``{0, 1}`` and ``mu(1) = 1``; pair atoms sum to ``-C(n,2)/2``."""
    if n < 3:
        raise RangeError("the pair-atom formula needs n >= 3")
    check_size(n, SOLVE_MAX_N, "atoms for exact solving")
    alg = FiniteAlgebra(n)
    half = Fraction(1, 2)
    mu = Submeasure(alg, tuple(Fraction(0) if a == 0 else Fraction(1) if a == alg.one else half for a in alg.elements()))
    lam = solve_signed_measure(mu)
    sfr = StarFreeAlgebra(n)
    a = sum(sfr.atom(y) for y in sfr.subsets if bin(y).count("1") == 2)
    return UnboundedExample(mu, lam, a, lam(a))


def unbounded_value(n: int) -> Fraction:
    return -Fraction(comb(n, 2), 2)


# ---------------------------------------------------------------- chains


@dataclass(frozen=True)
class Chain:
    """``A_1 <= ... <= A_k`` inside an algebra with ``top`` atoms.

    Level ``i`` is a partition of ``1`` into blocks (elements of the top
    algebra); its atoms are those blocks.  ``values`` is the functional on
    the top algebra, indexed by element.
    """

    top: FiniteAlgebra
    levels: tuple[tuple[Element, ...], ...]
    values: tuple[Fraction, ...]

    def __post_init__(self):
        if not self.levels:
            raise PreconditionError("a chain needs at least one level")
        if len(self.values) != self.top.size:
            raise FormatError(f"expected {self.top.size} functional values")
        if self.values[0] != 0:
            raise FormatError("functional must vanish at 0")
        for i, blocks in enumerate(self.levels):
            if not is_partition(self.top, blocks):
                raise PreconditionError(f"level {i + 1} is not a partition of 1")
        for i in range(len(self.levels) - 1):
            lo, hi = self.levels[i], self.levels[i + 1]
            if len(hi) <= len(lo):
                raise PreconditionError("atom counts must strictly increase along the chain")
            for b in hi:
                if not any(b & ~a == 0 for a in lo):
                    raise PreconditionError(f"level {i + 2} does not refine level {i + 1}")

    def level_values(self, i: int) -> list[Fraction]:
        blocks = self.levels[i]
        out = []
        for p in range(1 << len(blocks)):
            e = 0
            for j in atoms_of(p):
                e |= blocks[j - 1]
            out.append(self.values[e])
        return out


@dataclass(frozen=True)
class ChainTransform:
    lams: tuple[SignedMeasure, ...]
    embeddings: dict
    checks: dict

    @property
    def coherent(self) -> bool:
        return all(self.checks.values())

    def to_json(self) -> dict:
        return {
            "levels": [lam.to_json() for lam in self.lams],
            "embeddings": {
                f"{i + 1}->{j + 1}": [subset_label_mask(m) for m in imgs] for (i, j), imgs in sorted(self.embeddings.items())
            },
            "checks": {k: v for k, v in sorted(self.checks.items())},
            "coherent": self.coherent,
        }


def subset_label_mask(m: Element) -> list[int]:
    """Atom positions (1-based) of an ``sfr`` element."""
    return list(atoms_of(m))


def embedding(chain: Chain, i: int, j: int) -> tuple[Element, ...]:
    """Images in ``sfr(n_j)`` of the atoms of ``sfr(n_i)`` (canonical order).

    Atom ``z`` of ``sfr(n_j)`` lies below the image of atom ``y`` exactly when
    the level-``i`` parents of the blocks in ``z`` are the blocks in ``y``.
    """
    lo, hi = chain.levels[i], chain.levels[j]
    parent = [next(l for l, a in enumerate(lo) if b & ~a == 0) for b in hi]
    src, dst = StarFreeAlgebra(len(lo)), StarFreeAlgebra(len(hi))
    imgs = {y: 0 for y in src.subsets}
    for p, z in enumerate(dst.subsets):
        y = 0
        for m in atoms_of(z):
            y |= 1 << parent[m - 1]
        imgs[y] |= 1 << p
    return tuple(imgs[y] for y in src.subsets)


def _apply(images: Sequence[Element], a: Element) -> Element:
    out = 0
    for p in atoms_of(a):
        out |= images[p - 1]
    return out


def transform_functional(chain: Chain) -> ChainTransform:
    """Signed measures per level with the coherence equations verified exactly."""
    k = len(chain.levels)
    lams = []
    checks: dict[str, bool] = {}
    for i in range(k):
        vals = chain.level_values(i)
        lam = solve_signed_measure(vals)
        lams.append(lam)
        checks[f"level {i + 1} round trip"] = not round_trip_errors(vals, lam)
    embeddings = {}
    for i in range(k):
        for j in range(i + 1, k):
            imgs = embedding(chain, i, j)
            embeddings[(i, j)] = imgs
            lo, hi = chain.levels[i], chain.levels[j]
            fi, fj = GoodMap.canonical(len(lo)), GoodMap.canonical(len(hi))
            # block l of level i as a pattern over level j blocks
            pattern = [sum(1 << m for m, b in enumerate(hi) if b & ~a == 0) for a in lo]
            checks[f"{i + 1}->{j + 1} extends good maps"] = all(
                _apply(imgs, fi(1 << l)) == fj(pattern[l]) for l in range(len(lo))
            )
            checks[f"{i + 1}->{j + 1} coherence"] = all(
                lams[j](img) == lams[i].atom_values[p] for p, img in enumerate(imgs)
            )
            checks[f"{i + 1}->{j + 1} injective"] = all(imgs) and not any(
                imgs[p] & imgs[q] for p in range(len(imgs)) for q in range(p)
            )
    return ChainTransform(tuple(lams), embeddings, checks)


# ---------------------------------------------------------------- level systems


@dataclass(frozen=True)
class LevelSystem:
    """Level sets ``T_1..T_d`` over ``X_i = [branching[i-1]]``.

    ``prefixes[i-1]`` lists ``X^(i)`` lexicographically; a member of ``T_i`` is a
    bitmask over that list.
    """

    branching: tuple[int, ...]
    prefixes: tuple[tuple[tuple[int, ...], ...], ...]
    levels: tuple[tuple[int, ...], ...]

    @property
    def depth(self) -> int:
        return len(self.levels)

    def index(self, t: Sequence[int]) -> int:
        return self.prefixes[len(t) - 1].index(tuple(t))

    def check_n(self, n: int) -> None:
        if not 1 <= n <= self.depth:
            raise RangeError(f"n={n} outside [1, {self.depth}]")

    def points(self, n: int) -> list[tuple[int, ...]]:
        self.check_n(n)
        return list(itertools.product(*self.levels[:n]))

    def n_points(self, n: int) -> int:
        return prod(len(T) for T in self.levels[:n])

    def level_sets(self, i: int) -> list[frozenset]:
        pre = self.prefixes[i - 1]
        return [frozenset(pre[b] for b in atoms_index(m)) for m in self.levels[i - 1]]


def atoms_index(m: int) -> list[int]:
    return [i - 1 for i in atoms_of(m)]


def build_levels(branching: Sequence[int], depth: int, cap: int = LEVEL_CAP) -> LevelSystem:
    if depth < 1:
        raise RangeError("depth must be at least 1")
    if len(branching) < depth:
        raise RangeError(f"branching lists {len(branching)} factors, depth {depth} requested")
    br = tuple(int(b) for b in branching[:depth])
    if any(b < 2 for b in br):
        raise RangeError("every factor needs at least 2 points")
    prefixes = []
    levels = []
    total = 1
    for i in range(depth):
        fibers = prod(br[:i])
        size = (2 ** br[i] - 1) ** fibers
        total *= size
        check_size(total, cap, "level points")
        pre = tuple(itertools.product(*(range(1, b + 1) for b in br[: i + 1])))
        prefixes.append(pre)
        # children of the parent at index p occupy positions p*b .. p*b+b-1
        b = br[i]
        choices = range(1, 1 << b)
        members = []
        for pick in itertools.product(choices, repeat=fibers):
            m = 0
            for p, c in enumerate(pick):
                m |= c << (p * b)
            members.append(m)
        levels.append(tuple(sorted(members)))
    return LevelSystem(br, tuple(prefixes), tuple(levels))


def _check_prefix(levels: LevelSystem, t: Sequence[int]) -> tuple[int, ...]:
    t = tuple(t)
    levels.check_n(len(t))
    for i, v in enumerate(t):
        if not 1 <= v <= levels.branching[i]:
            raise RangeError(f"value {v} at coordinate {i + 1} outside [1, {levels.branching[i]}]")
    return t


def explicit_f(levels: LevelSystem, ts) -> frozenset:
    """Points ``f`` of ``T^(n)`` generated by some prefix in ``ts``.

    ``ts`` is one prefix or a collection of prefixes of common length ``n``;
    the result for a collection is the union of the single-prefix results.
    """
    if ts and isinstance(next(iter(ts)), int):
        ts = [ts]
    ts = [_check_prefix(levels, t) for t in ts]
    if not ts:
        return frozenset()
    n = len(ts[0])
    if any(len(t) != n for t in ts):
        raise FormatError("prefixes must share a length")
    out = set()
    for t in ts:
        per_level = []
        for i in range(1, n + 1):
            bit = 1 << levels.index(t[:i])
            per_level.append([A for A in levels.levels[i - 1] if A & bit])
        out.update(itertools.product(*per_level))
    return frozenset(out)


def _check_point(levels: LevelSystem, f: Sequence[int]) -> tuple[int, ...]:
    f = tuple(f)
    levels.check_n(len(f))
    for i, A in enumerate(f):
        if A not in levels.levels[i]:
            raise FormatError(f"coordinate {i + 1} is not a member of T_{i + 1}")
    return f


def generators_of(levels: LevelSystem, f: Sequence[int]) -> frozenset:
    f = _check_point(levels, f)
    n = len(f)
    alive = [t for t in levels.prefixes[0] if f[0] >> levels.index(t) & 1]
    for i in range(1, n):
        b = levels.branching[i]
        alive = [t + (x,) for t in alive for x in range(1, b + 1) if f[i] >> levels.index(t + (x,)) & 1]
    return frozenset(alive)


def f_generated_by(levels: LevelSystem, A: Iterable[Sequence[int]]) -> tuple[int, ...]:
    """A point whose generator set is exactly ``A`` (orphans extend by value 1)."""
    A = {_check_prefix(levels, t) for t in A}
    if not A:
        raise PreconditionError("the empty set generates no level point")
    ns = {len(t) for t in A}
    if len(ns) != 1:
        raise FormatError("prefixes must share a length")
    n = ns.pop()
    f = []
    for i in range(1, n + 1):
        proj = {t[:i] for t in A}
        m = 0
        for t in proj:
            m |= 1 << levels.index(t)
        if i > 1:
            parents = {t[: i - 1] for t in A}
            for p in levels.prefixes[i - 2]:
                if p not in parents:
                    m |= 1 << levels.index(p + (1,))
        f.append(m)
    return tuple(f)


@dataclass(frozen=True)
class CylinderMap:
    """The explicit map at depth ``n`` between finite algebras.

    Source atoms are the prefixes of ``X^(n)`` and target atoms the points of
    ``T^(n)``, both in lexicographic order.
    """

    source: FiniteAlgebra
    target: FiniteAlgebra
    atom_images: tuple[Element, ...]

    def __call__(self, a: Element) -> Element:
        return _apply(self.atom_images, a)


def explicit_f_map(levels: LevelSystem, n: int) -> CylinderMap:
    levels.check_n(n)
    pts = levels.points(n)
    pos = {p: k for k, p in enumerate(pts)}
    imgs = []
    for t in levels.prefixes[n - 1]:
        imgs.append(sum(1 << pos[p] for p in explicit_f(levels, t)))
    return CylinderMap(FiniteAlgebra(len(levels.prefixes[n - 1])), FiniteAlgebra(len(pts)), tuple(imgs))


def pullback_submeasure(lam: SignedMeasure, f: Callable[[Element], Element], source: FiniteAlgebra) -> Submeasure:
    """``mu(c) = lam(f(c))`` for a union-preserving ``f`` with ``f(0) = 0``."""
    if not lam.is_nonnegative():
        raise PreconditionError("pullback needs a nonnegative measure")
    if f(0) != 0:
        raise PreconditionError("map must send 0 to 0")
    imgs = [f(a) for a in source.atoms()]
    vals = []
    for a in source.elements():
        fa = f(a)
        if fa != _apply(imgs, a):
            raise PreconditionError(f"map does not preserve unions at element {list(atoms_of(a))}")
        vals.append(lam(fa))
    return validate(source, vals)
