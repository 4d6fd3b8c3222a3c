"""Exact submeasure tables on finite Boolean algebras.

A :class:`Submeasure` stores one :class:`~fractions.Fraction` per element of
its algebra, indexed by the element bitmask.  Construction does not check
the axioms; :func:`validate` does.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from . import lp
from .algebra import (
    Element,
    FiniteAlgebra,
    atoms_of,
    check_size,
    is_partition,
    popcount,
)
from .errors import FormatError, PreconditionError, RangeError

MAX_ATOMS = 16


@dataclass(frozen=True, eq=False)
class Submeasure:
    algebra: FiniteAlgebra
    values: tuple[Fraction, ...]

    def __post_init__(self):
        if len(self.values) != self.algebra.size:
            raise FormatError(f"expected {self.algebra.size} values, got {len(self.values)}")

    def __call__(self, a: Element) -> Fraction:
        return self.values[a]

    def __eq__(self, other):
        if not isinstance(other, Submeasure):
            return NotImplemented
        return self.algebra == other.algebra and self.values == other.values

    def __hash__(self):
        return hash((self.algebra, self.values))

    @property
    def n_atoms(self) -> int:
        return self.algebra.n_atoms

    @property
    def total(self) -> Fraction:
        return self.values[self.algebra.one]

    def atom_values(self) -> list[Fraction]:
        return [self.values[a] for a in self.algebra.atoms()]

    def scaled(self, factor) -> "Submeasure":
        f = Fraction(factor)
        return Submeasure(self.algebra, tuple(v * f for v in self.values))

    @classmethod
    def from_function(cls, algebra: FiniteAlgebra, fn: Callable[[Element], object]) -> "Submeasure":
        return cls(algebra, tuple(Fraction(fn(a)) for a in algebra.elements()))


def measure_from_atoms(algebra: FiniteAlgebra, atom_values: Sequence) -> Submeasure:
    """The additive table with the given atom masses (atom 1 first)."""
    if len(atom_values) != algebra.n_atoms:
        raise FormatError("one value per atom required")
    vals = [Fraction(0)] * algebra.size
    atom_vals = [Fraction(v) for v in atom_values]
    for a in range(1, algebra.size):
        low = a & -a
        vals[a] = vals[a ^ low] + atom_vals[low.bit_length() - 1]
    return Submeasure(algebra, tuple(vals))


def uniform_measure(algebra: FiniteAlgebra, total=1) -> Submeasure:
    return measure_from_atoms(algebra, [Fraction(total, algebra.n_atoms)] * algebra.n_atoms)


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class Violation:
    axiom: str  # "zero" | "monotone" | "subadditive"
    witness: tuple[Element, ...]


class SubmeasureViolation(PreconditionError):
    kind = "not-a-submeasure"

    def __init__(self, violations: list[Violation]):
        super().__init__(f"{len(violations)} axiom violation(s), first: {violations[0]}")
        self.violations = violations


def _scaled_ints(values: Sequence[Fraction]):
    den = 1
    for v in values:
        den = den * v.denominator // np.gcd(den, v.denominator)
    ints = [v.numerator * (den // v.denominator) for v in values]
    if max(abs(x) for x in ints) < 2**60:
        return np.array(ints, dtype=np.int64)
    return np.array(ints, dtype=object)


def _submasks_array(c: int) -> np.ndarray:
    bits = [1 << i for i in range(c.bit_length()) if c >> i & 1]
    k = len(bits)
    r = np.arange(1 << k, dtype=np.int64)
    out = np.zeros(1 << k, dtype=np.int64)
    for j, b in enumerate(bits):
        out |= ((r >> j) & 1) * b
    return out


def find_violations(algebra: FiniteAlgebra, values: Sequence[Fraction], limit: int | None = None) -> list[Violation]:
    """Every failing axiom instance.

    Monotonicity is reported on covering pairs ``(a, a + atom)``, which is
    equivalent to checking all comparable pairs.  Subadditivity is checked
    on all pairs ``a <= b`` in mask order with ``a & b == 0`` when the table
    is monotone (disjoint pairs then suffice); otherwise on all pairs.
    """
    out: list[Violation] = []

    def full():
        return limit is not None and len(out) >= limit

    if values[0] != 0:
        out.append(Violation("zero", (0,)))
    n = algebra.size
    for a in range(n):
        for i in range(algebra.n_atoms):
            bit = 1 << i
            if not a & bit and values[a] > values[a | bit]:
                out.append(Violation("monotone", (a, a | bit)))
                if full():
                    return out
    v = _scaled_ints(values)
    monotone = not any(x.axiom == "monotone" for x in out)
    for a in range(n):
        if monotone:
            others = _submasks_array(algebra.complement(a))
            others = others[others >= a]
        else:
            others = np.arange(a, n, dtype=np.int64)
        bad = others[v[a | others] > v[a] + v[others]]
        for b in bad.tolist():
            out.append(Violation("subadditive", (a, int(b))))
            if full():
                return out
    return out


def coerce_table(algebra: FiniteAlgebra, table) -> tuple[Fraction, ...]:
    """Accept a sequence indexed by element or a mapping element -> value."""
    if isinstance(table, Mapping):
        vals = []
        for a in algebra.elements():
            if a in table:
                vals.append(Fraction(table[a]))
            elif a == 0:
                vals.append(Fraction(0))
            else:
                raise FormatError(f"value missing for element {list(atoms_of(a))}")
        extra = [k for k in table if not algebra.contains(k)]
        if extra:
            raise FormatError(f"elements {extra} outside the algebra")
    else:
        if len(table) != algebra.size:
            raise FormatError(f"expected {algebra.size} values, got {len(table)}")
        vals = [Fraction(x) for x in table]
    neg = [a for a, x in enumerate(vals) if x < 0]
    if neg:
        raise FormatError(f"negative value at element {list(atoms_of(neg[0]))}")
    return tuple(vals)


def validate(algebra: FiniteAlgebra, table) -> Submeasure:
    """Return the table as a :class:`Submeasure`, or raise with every violation."""
    check_size(algebra.n_atoms, MAX_ATOMS, "atoms")
    vals = coerce_table(algebra, table)
    violations = find_violations(algebra, vals)
    if violations:
        raise SubmeasureViolation(violations)
    return Submeasure(algebra, vals)


def is_submeasure(mu: Submeasure) -> bool:
    return not find_violations(mu.algebra, mu.values, limit=1) and all(v >= 0 for v in mu.values)


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class PropertyReport:
    is_measure: bool
    is_strictly_positive: bool
    pathology_gap: Fraction
    n_pathological_max: int
    dominated_measure: tuple[Fraction, ...]


def is_additive(mu: Submeasure) -> bool:
    return mu.values == measure_from_atoms(mu.algebra, mu.atom_values()).values


def pathology_gap(mu: Submeasure) -> tuple[Fraction, tuple[Fraction, ...]]:
    """``max lambda(1)`` over measures ``0 <= lambda <= mu``, with a maximiser.

    Exact simplex with lazily generated constraints: solve against a subset
    of the ``2^n - 1`` constraints ``lambda(e) <= mu(e)``, add the violated
    ones, repeat.  A relaxation optimum that is feasible for all constraints
    is optimal.
    """
    alg = mu.algebra
    check_size(alg.n_atoms, MAX_ATOMS, "atoms")
    n = alg.n_atoms
    active = set(alg.atoms()) | {alg.one}
    while True:
        rows = sorted(active)
        A = [[1 if e >> i & 1 else 0 for i in range(n)] for e in rows]
        res = lp.maximize([1] * n, A, [mu(e) for e in rows])
        lam = measure_from_atoms(alg, res.x)
        violated = [e for e in alg.elements() if lam(e) > mu(e)]
        if not violated:
            return res.value, res.x
        violated.sort(key=lambda e: lam(e) - mu(e), reverse=True)
        active.update(violated[:4 * n])


def _minimal_elements(mu: Submeasure, pred: Callable[[Fraction], bool]) -> list[Element]:
    """Minimal nonzero elements satisfying ``pred``, ascending."""
    alg = mu.algebra
    n = alg.size
    hit = [pred(mu(a)) if a else False for a in range(n)]
    # below[a]: some b <= a (b != 0) satisfies pred
    below = [False] * n
    for a in range(1, n):
        if hit[a]:
            below[a] = True
            continue
        b = a
        while b:
            low = b & -b
            if below[a ^ low]:
                below[a] = True
                break
            b ^= low
    out = []
    for a in range(1, n):
        if not hit[a]:
            continue
        b = a
        minimal = True
        while b:
            low = b & -b
            if below[a ^ low]:
                minimal = False
                break
            b ^= low
        if minimal:
            out.append(a)
    return out


def _pack(candidates: list[Element], k: int, universe: Element) -> tuple[Element, ...] | None:
    """Least (in candidate order) ``k`` pairwise disjoint candidates, or None."""
    if k == 0:
        return ()
    if not candidates:
        return None
    min_size = min(popcount(c) for c in candidates)
    chosen: list[Element] = []

    def rec(start: int, free: Element) -> bool:
        need = k - len(chosen)
        if need == 0:
            return True
        if popcount(free) < need * min_size:
            return False
        for i in range(start, len(candidates)):
            c = candidates[i]
            if c & ~free:
                continue
            chosen.append(c)
            if rec(i + 1, free & ~c):
                return True
            chosen.pop()
        return False

    return tuple(chosen) if rec(0, universe) else None


def n_pathological_witness(mu: Submeasure, n: int) -> tuple[Element, ...] | None:
    """Disjoint nonzero ``a_1 < ... < a_n`` (mask order) with ``mu(a_i) = 1``.

    Any witness can be shrunk to minimal elements of value 1 while staying
    disjoint, so the search runs over those only.  Returns None when no
    witness exists.
    """
    if n < 1:
        raise RangeError("n must be >= 1")
    check_size(mu.n_atoms, MAX_ATOMS, "atoms")
    cands = _minimal_elements(mu, lambda v: v == 1)
    return _pack(cands, n, mu.algebra.one)


def n_pathological_max(mu: Submeasure) -> int:
    if mu.total < 1:
        return 0
    cands = _minimal_elements(mu, lambda v: v == 1)
    best = 0
    while _pack(cands, best + 1, mu.algebra.one) is not None:
        best += 1
    return best


def classify(mu: Submeasure) -> PropertyReport:
    gap, lam = pathology_gap(mu)
    return PropertyReport(
        is_measure=is_additive(mu),
        is_strictly_positive=all(v > 0 for v in mu.atom_values()),
        pathology_gap=gap,
        n_pathological_max=n_pathological_max(mu),
        dominated_measure=lam,
    )


def uniform_exhaustivity_profile(mu: Submeasure, N: int) -> Fraction:
    """``max over antichains a_1..a_N of nonzero elements of min_i mu(a_i)``.

    Enlarging antichain members never lowers ``mu`` so the answer is one of
    the table values; binary search over them, testing each threshold with a
    disjoint-packing search over minimal elements of ``{mu >= t}``.
    """
    alg = mu.algebra
    if N < 1 or N > alg.n_atoms:
        raise RangeError(f"antichain length {N} infeasible with {alg.n_atoms} atoms")
    check_size(alg.n_atoms, MAX_ATOMS, "atoms")
    levels = sorted(set(mu.values[1:]))

    def feasible(t: Fraction) -> bool:
        return _pack(_minimal_elements(mu, lambda v: v >= t), N, alg.one) is not None

    lo, hi = 0, len(levels) - 1  # levels[lo] feasible (atoms), find max feasible
    if feasible(levels[hi]):
        return levels[hi]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if feasible(levels[mid]):
            lo = mid
        else:
            hi = mid
    return levels[lo]


# ---------------------------------------------------------------------------
# constructions


def relative_index(block: Element) -> dict[int, int]:
    """Map ambient bit position -> bit position inside ``block``'s relative algebra."""
    return {a - 1: j for j, a in enumerate(atoms_of(block))}


def to_relative(a: Element, block: Element) -> Element:
    out = 0
    for j, atom in enumerate(atoms_of(block)):
        if a >> (atom - 1) & 1:
            out |= 1 << j
    return out


def block_pattern(a: Element, blocks: Sequence[Element]) -> Element:
    """Bitmask of the blocks that meet ``a``."""
    out = 0
    for j, b in enumerate(blocks):
        if a & b:
            out |= 1 << j
    return out


def union_of_blocks(pattern: Element, blocks: Sequence[Element]) -> Element:
    out = 0
    for j, b in enumerate(blocks):
        if pattern >> j & 1:
            out |= b
    return out


def fromchris(algebra, partition, mu, parts, a: Element) -> Fraction | None:
    """The prescribed amalgamation value on ``U_i C_{a_i}  u  <a_0..a_n>``.

    Returns None for elements outside that set.
    """
    for i, b in enumerate(partition):
        if a and a & ~b == 0:
            return mu(1 << i) * parts[i](to_relative(a, b))
    pattern = block_pattern(a, partition)
    if union_of_blocks(pattern, partition) == a:
        return mu(pattern)
    return None


def amalgamate(
    algebra: FiniteAlgebra,
    partition: Sequence[Element],
    mu: Submeasure,
    parts: Sequence[Submeasure],
) -> Submeasure:
    """Glue normalised submeasures on the blocks of a partition.

    ``mu`` lives on the block algebra (bit ``i`` = block ``i``); ``parts[i]``
    on the relative algebra of block ``i`` (its atoms in ascending order).
    The value at ``a`` is the least weight of a cover of ``a`` by block
    unions (priced by ``mu``) and pieces inside single blocks (priced by
    ``mu(block) * parts[i]``).  Optimal covers can be taken disjoint, made of
    one block union ``K`` and the pieces ``a & block`` off ``K``.
    """
    check_size(algebra.n_atoms, MAX_ATOMS, "atoms")
    if not is_partition(algebra, partition):
        raise PreconditionError("blocks are not a partition of 1 into nonzero pieces")
    k = len(partition)
    if mu.n_atoms != k:
        raise PreconditionError(f"block submeasure has {mu.n_atoms} atoms, partition has {k} blocks")
    if len(parts) != k:
        raise PreconditionError("one part per block required")
    for i, (b, phi) in enumerate(zip(partition, parts)):
        if phi.n_atoms != popcount(b):
            raise PreconditionError(f"part {i} has {phi.n_atoms} atoms, block has {popcount(b)}")
        if phi.total != 1:
            raise PreconditionError(f"part {i} is not normalised")
    block_mass = [mu(1 << i) for i in range(k)]
    proj = [atoms_of(b) for b in partition]

    def piece_cost(i: int, a: Element) -> Fraction:
        r = 0
        for j, atom in enumerate(proj[i]):
            if a >> (atom - 1) & 1:
                r |= 1 << j
        return block_mass[i] * parts[i](r) if r else Fraction(0)

    vals = [Fraction(0)] * algebra.size
    for a in range(1, algebra.size):
        support = block_pattern(a, partition)
        costs = [piece_cost(i, a) for i in range(k)]
        best = None
        K = support
        while True:
            total = mu(K) if K else Fraction(0)
            rest = support & ~K
            j = 0
            while rest:
                if rest & 1:
                    total += costs[j]
                rest >>= 1
                j += 1
            if best is None or total < best:
                best = total
            if K == 0:
                break
            K = (K - 1) & support
        vals[a] = best
    return Submeasure(algebra, tuple(vals))


@dataclass(frozen=True)
class Extension:
    """A submeasure on the subalgebra of ``ambient`` whose atoms are ``blocks``."""

    ambient: FiniteAlgebra
    blocks: tuple[Element, ...]
    measure: Submeasure

    def __call__(self, a: Element) -> Fraction:
        pattern = 0
        for j, b in enumerate(self.blocks):
            if a & b:
                if a & b != b:
                    raise PreconditionError("element not in the subalgebra")
                pattern |= 1 << j
        return self.measure(pattern)

    def elements(self) -> list[Element]:
        return [union_of_blocks(p, self.blocks) for p in range(1 << len(self.blocks))]


def extend_min_cover(ext: Extension, c: Element) -> Extension:
    """Extend to ``<dom u {c}>`` by ``b -> min{lambda(d) : d in dom, b <= d}``.

    The minimum over the old domain is attained at the union of the old
    atoms meeting ``b`` because ``lambda`` is monotone.
    """
    ext.ambient.check(c)
    new_blocks = []
    for b in ext.blocks:
        for piece in (b & c, b & ~c):
            if piece:
                new_blocks.append(piece)
    new_blocks.sort(key=lambda b: b & -b)
    k = len(new_blocks)
    parent = []
    for nb in new_blocks:
        parent.append(next(j for j, b in enumerate(ext.blocks) if nb & b))
    vals = []
    for p in range(1 << k):
        up = 0
        for j in range(k):
            if p >> j & 1:
                up |= 1 << parent[j]
        vals.append(ext.measure(up))
    return Extension(ext.ambient, tuple(new_blocks), Submeasure(FiniteAlgebra(k), tuple(vals)))


@dataclass(frozen=True)
class Refinement:
    q: Submeasure
    parent_blocks: tuple[Element, ...]
    cross_sections: tuple[Element, ...]

    def piece(self, i: int, l: int) -> Element:
        """The ``l``-th piece (1-based) of parent atom ``i`` (0-based)."""
        n = len(self.cross_sections)
        return 1 << (i * n + l - 1)


def pathological_refinement(p: Submeasure, n: int) -> Refinement:
    """Split every atom of ``dom(p)`` into ``n`` pieces, ``q(a) = p(least d >= a)``.

    Piece ``l`` of parent ``i`` is atom ``i*n + l``.  The cross-sections
    ``a_l = U_i b_i^l`` meet every parent, so ``q(a_l) = p(1) = 1``.
    """
    if n < 2:
        raise RangeError("refinement needs n >= 2")
    if p.total != 1:
        raise PreconditionError("p must be normalised")
    k = p.n_atoms
    check_size(k * n, MAX_ATOMS, "atoms after refinement")
    alg = FiniteAlgebra(k * n)
    blocks = tuple(((1 << n) - 1) << (i * n) for i in range(k))
    vals = [p(block_pattern(a, blocks)) for a in alg.elements()]
    cross = tuple(sum(1 << (i * n + l) for i in range(k)) for l in range(n))
    return Refinement(Submeasure(alg, tuple(vals)), blocks, cross)


def exhaustive_stage_extension(p: Submeasure, target: FiniteAlgebra, blocks: Sequence[Element]) -> Submeasure:
    """Amalgamate ``p`` with uniform measures on each of its atoms' blocks.

    ``blocks[i]`` is atom ``i+1`` of ``dom(p)`` written in ``target``.
    """
    if not is_partition(target, blocks) or len(blocks) != p.n_atoms:
        raise PreconditionError("target does not refine dom(p) along the given blocks")
    if p.total != 1:
        raise PreconditionError("p must be normalised")
    parts = [uniform_measure(FiniteAlgebra(popcount(b))) for b in blocks]
    return amalgamate(target, blocks, p, parts)


def restrict(mu: Submeasure, blocks: Sequence[Element]) -> Submeasure:
    """``mu`` on the subalgebra with atoms ``blocks`` (bit j = block j)."""
    k = len(blocks)
    return Submeasure(FiniteAlgebra(k), tuple(mu(union_of_blocks(p, blocks)) for p in range(1 << k)))


def random_submeasure(rng, n_atoms: int, max_den: int = 12, kind: str | None = None) -> Submeasure:
    """A random valid rational submeasure (used by drivers and tests).

    Kinds: ``"max"`` (max of a few random measures) and ``"cover"`` (least
    weight of a cover by a random weighted family that includes 1).
    """
    alg = FiniteAlgebra(n_atoms)
    kind = kind or rng.choice(["max", "cover"])
    if kind == "max":
        ms = []
        for _ in range(rng.randint(1, 3)):
            ms.append(measure_from_atoms(alg, [Fraction(rng.randint(0, max_den), max_den) for _ in range(n_atoms)]))
        vals = tuple(max(m(a) for m in ms) for a in alg.elements())
        return Submeasure(alg, vals)
    family = {alg.one: Fraction(rng.randint(1, max_den), max_den)}
    for _ in range(rng.randint(1, 2 * n_atoms)):
        e = rng.randint(1, alg.one)
        family[e] = min(family.get(e, Fraction(10**6)), Fraction(rng.randint(0, max_den), max_den))
    return cover_submeasure(alg, family)


def cover_submeasure(alg: FiniteAlgebra, family: Mapping[Element, Fraction]) -> Submeasure:
    """``a -> min{ sum of weights : a <= union of a subfamily }`` by DP over masks."""
    inf = None
    best: list = [inf] * alg.size
    best[0] = Fraction(0)
    items = sorted(family.items())
    # cost[m] = least weight of a subfamily whose union is exactly m
    cost: dict[Element, Fraction] = {0: Fraction(0)}
    for e, w in items:
        for m, c in list(cost.items()):
            u = m | e
            if u not in cost or cost[u] > c + w:
                cost[u] = c + w
    for a in range(1, alg.size):
        cands = [c for m, c in cost.items() if a & ~m == 0]
        best[a] = min(cands)
    return Submeasure(alg, tuple(best))


def as_table(mu: Submeasure) -> dict[tuple[int, ...], Fraction]:
    return {atoms_of(a): v for a, v in enumerate(mu.values)}


def from_atom_lists(algebra: FiniteAlgebra, table: Mapping[Iterable[int], object]) -> dict[Element, Fraction]:
    out: dict[Element, Fraction] = {}
    for key, v in table.items():
        m = 0
        for i in key:
            if not 1 <= i <= algebra.n_atoms:
                raise FormatError(f"atom {i} outside [1, {algebra.n_atoms}]")
            m |= 1 << (i - 1)
        out[m] = Fraction(v)
    return out
