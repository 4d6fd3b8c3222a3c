"""Finite Boolean algebras and clopen subsets of finite-depth product spaces.

Elements of a :class:`FiniteAlgebra` are plain ``int`` bitmasks: atom ``i``
(1-based, as in ``[n] = {1, ..., n}``) is bit ``i - 1``.  Meet, join and
complement are therefore ``&``, ``|`` and ``alg.complement``.

Clopen sets of a product space ``prod_i X_i`` are stored as boolean leaf
arrays at a finite depth (:class:`CylinderSet`).  Prefixes are ``dict``
objects mapping 1-based coordinates to 1-based values.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import DepthError, InvalidPrefixError, PreconditionError, SizeCapError

Element = int
Prefix = Mapping[int, int]

DEFAULT_MAX_LEAVES = 2**21
TALAGRAND_MAX_DEPTH = 6


def atoms_of(element: Element) -> tuple[int, ...]:
    """1-based atom indices below ``element``, ascending."""
    out = []
    i = 1
    while element:
        if element & 1:
            out.append(i)
        element >>= 1
        i += 1
    return tuple(out)


def element_of(atoms: Iterable[int]) -> Element:
    mask = 0
    for a in atoms:
        if a < 1:
            raise PreconditionError(f"atom index {a} < 1")
        mask |= 1 << (a - 1)
    return mask


def popcount(x: int) -> int:
    return bin(x).count("1")


@dataclass(frozen=True)
class FiniteAlgebra:
    n_atoms: int

    def __post_init__(self):
        if not isinstance(self.n_atoms, int) or self.n_atoms < 1:
            raise PreconditionError("a finite algebra needs at least one atom")

    @property
    def zero(self) -> Element:
        return 0

    @property
    def one(self) -> Element:
        return (1 << self.n_atoms) - 1

    @property
    def size(self) -> int:
        return 1 << self.n_atoms

    def atoms(self) -> list[Element]:
        return [1 << i for i in range(self.n_atoms)]

    def elements(self) -> range:
        return range(self.size)

    def complement(self, a: Element) -> Element:
        return self.one & ~a

    def contains(self, a: Element) -> bool:
        return 0 <= a <= self.one

    def check(self, a: Element) -> Element:
        if not self.contains(a):
            raise PreconditionError(f"element {a:#x} not in algebra with {self.n_atoms} atoms")
        return a

    def below(self, a: Element) -> Iterator[Element]:
        """All elements ``b <= a`` (submask enumeration, 0 included)."""
        b = a
        while True:
            yield b
            if b == 0:
                return
            b = (b - 1) & a


def generate_subalgebra(algebra: FiniteAlgebra, elements: Sequence[Element]) -> list[Element]:
    """Atoms of the subalgebra generated by ``elements``.

    Two atoms of ``algebra`` land in the same generated atom exactly when no
    generator separates them, so the blocks are the classes of the membership
    signature.  Blocks are returned ordered by their least atom.
    """
    for e in elements:
        algebra.check(e)
    blocks: dict[tuple[bool, ...], int] = {}
    for i in range(algebra.n_atoms):
        bit = 1 << i
        sig = tuple(bool(e & bit) for e in elements)
        blocks[sig] = blocks.get(sig, 0) | bit
    return sorted(blocks.values(), key=lambda b: b & -b)


def subalgebra_elements(blocks: Sequence[Element]) -> list[Element]:
    """All unions of the given pairwise disjoint blocks."""
    out = []
    for r in range(len(blocks) + 1):
        for combo in itertools.combinations(blocks, r):
            m = 0
            for b in combo:
                m |= b
            out.append(m)
    return sorted(out)


def is_partition(algebra: FiniteAlgebra, blocks: Sequence[Element]) -> bool:
    seen = 0
    for b in blocks:
        if b == 0 or b & seen or not algebra.contains(b):
            return False
        seen |= b
    return seen == algebra.one


# ---------------------------------------------------------------------------
# product spaces


@dataclass(frozen=True)
class CylinderSpace:
    """``prod_{i <= d} X_i`` with ``branching[i-1] = |X_i|``."""

    branching: tuple[int, ...]
    max_leaves: int = DEFAULT_MAX_LEAVES

    def __post_init__(self):
        object.__setattr__(self, "branching", tuple(int(b) for b in self.branching))
        if any(b < 1 for b in self.branching):
            raise PreconditionError("branching values must be >= 1")

    @classmethod
    def talagrand(cls, max_depth: int = TALAGRAND_MAX_DEPTH, max_leaves: int = DEFAULT_MAX_LEAVES):
        """The space ``prod_n [2^n]`` truncated at ``max_depth``."""
        return cls(tuple(2**n for n in range(1, max_depth + 1)), max_leaves)

    @property
    def max_depth(self) -> int:
        return len(self.branching)

    def shape(self, depth: int) -> tuple[int, ...]:
        self.check_depth(depth)
        return self.branching[:depth]

    def n_leaves(self, depth: int) -> int:
        return int(np.prod(self.branching[:depth], dtype=object)) if depth else 1

    def check_depth(self, depth: int) -> int:
        if depth < 0 or depth > self.max_depth:
            raise DepthError(f"depth {depth} outside [0, {self.max_depth}]")
        n = 1
        for b in self.branching[:depth]:
            n *= b
        if n > self.max_leaves:
            raise DepthError(f"depth {depth} has {n} leaves, above the cap {self.max_leaves}")
        return depth

    def check_prefix(self, s: Prefix) -> None:
        for i, v in s.items():
            if not isinstance(i, (int, np.integer)) or i < 1 or i > self.max_depth:
                raise InvalidPrefixError(f"coordinate {i} outside [1, {self.max_depth}]")
            if not 1 <= v <= self.branching[i - 1]:
                raise InvalidPrefixError(
                    f"value {v} at coordinate {i} outside [1, {self.branching[i - 1]}]"
                )

    def points(self, depth: int) -> Iterator[tuple[int, ...]]:
        """Points of ``prod_{i <= depth} X_i`` as 1-based tuples, C order."""
        return itertools.product(*(range(1, b + 1) for b in self.shape(depth)))

    def full(self) -> "CylinderSet":
        return CylinderSet(self, 0, np.ones((), dtype=bool))

    def empty(self) -> "CylinderSet":
        return CylinderSet(self, 0, np.zeros((), dtype=bool))


@dataclass(frozen=True, eq=False)
class CylinderSet:
    """A clopen set given by its leaves at some finite depth.

    The stored depth is always canonical: the least depth at which the set is
    a union of basic cylinders.
    """

    space: CylinderSpace
    depth: int
    mask: np.ndarray = field(repr=False)

    def __post_init__(self):
        mask = np.asarray(self.mask, dtype=bool)
        depth = self.depth
        if mask.shape != self.space.shape(depth):
            raise PreconditionError(f"mask shape {mask.shape} does not match depth {depth}")
        while depth > 0 and (mask.all(axis=-1) | ~mask.any(axis=-1)).all():
            mask = mask[..., 0]
            depth -= 1
        mask = np.array(mask, dtype=bool)
        mask.setflags(write=False)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "depth", depth)

    @classmethod
    def from_leaves(cls, space: CylinderSpace, depth: int, leaves: Iterable[Sequence[int]]):
        mask = np.zeros(space.shape(depth), dtype=bool)
        for leaf in leaves:
            mask[tuple(v - 1 for v in leaf)] = True
        return cls(space, depth, mask)

    def at_depth(self, depth: int) -> np.ndarray:
        """The leaf array at ``depth >= self.depth``."""
        if depth < self.depth:
            raise DepthError(f"cannot view a depth-{self.depth} set at depth {depth}")
        shape = self.space.shape(depth)
        m = self.mask.reshape(self.mask.shape + (1,) * (depth - self.depth))
        return np.broadcast_to(m, shape)

    def leaf_count(self, depth: int | None = None) -> int:
        d = self.depth if depth is None else depth
        return int(self.at_depth(d).sum())

    def leaves(self, depth: int | None = None) -> list[tuple[int, ...]]:
        d = self.depth if depth is None else depth
        if d == 0:
            return [()] if bool(self.mask) else []
        return [tuple(int(i) + 1 for i in idx) for idx in zip(*np.nonzero(self.at_depth(d)))]

    def bits(self, depth: int) -> int:
        """Leaf set at ``depth`` as a Python int, bit ``k`` = k-th leaf in C order."""
        flat = np.ascontiguousarray(self.at_depth(depth)).reshape(-1)
        return int.from_bytes(np.packbits(flat, bitorder="little").tobytes(), "little")

    @classmethod
    def from_bits(cls, space: CylinderSpace, depth: int, bits: int):
        n = space.n_leaves(depth)
        raw = bits.to_bytes((n + 7) // 8, "little")
        flat = np.unpackbits(np.frombuffer(raw, dtype=np.uint8), bitorder="little")[:n]
        return cls(space, depth, flat.astype(bool).reshape(space.shape(depth)))

    def _pair(self, other: "CylinderSet"):
        if other.space.branching[: max(self.depth, other.depth)] != self.space.branching[
            : max(self.depth, other.depth)
        ]:
            raise PreconditionError("cylinder sets live in different spaces")
        d = max(self.depth, other.depth)
        return d, self.at_depth(d), other.at_depth(d)

    def __or__(self, other):
        d, a, b = self._pair(other)
        return CylinderSet(self.space, d, a | b)

    def __and__(self, other):
        d, a, b = self._pair(other)
        return CylinderSet(self.space, d, a & b)

    def __sub__(self, other):
        d, a, b = self._pair(other)
        return CylinderSet(self.space, d, a & ~b)

    def __xor__(self, other):
        d, a, b = self._pair(other)
        return CylinderSet(self.space, d, a ^ b)

    def complement(self) -> "CylinderSet":
        return CylinderSet(self.space, self.depth, ~self.mask)

    def __invert__(self):
        return self.complement()

    def __le__(self, other):
        d, a, b = self._pair(other)
        return bool((a & ~b).sum() == 0)

    def __eq__(self, other):
        if not isinstance(other, CylinderSet):
            return NotImplemented
        return self.depth == other.depth and np.array_equal(self.mask, other.mask)

    def __hash__(self):
        return hash((self.depth, self.mask.tobytes()))

    def is_empty(self) -> bool:
        return not self.mask.any()

    def is_full(self) -> bool:
        return bool(self.mask.all())

    def __bool__(self):
        return not self.is_empty()


def cylinder_from_prefix(space: CylinderSpace, s: Prefix, depth: int) -> CylinderSet:
    """The basic clopen set ``[s]`` viewed at ``depth``."""
    space.check_prefix(s)
    if s and max(s) > depth:
        raise DepthError(f"prefix mentions coordinate {max(s)} beyond depth {depth}")
    mask = np.zeros(space.shape(depth), dtype=bool)
    idx = tuple(s[i] - 1 if i in s else slice(None) for i in range(1, depth + 1))
    mask[idx] = True
    return CylinderSet(space, depth, mask)


def dset_to_cylinder(space: CylinderSpace, index_set: Iterable[int], tau: Prefix, depth: int) -> CylinderSet:
    """``bigcap_{n in I} S_{n, tau(n)}`` where ``S_{n,v} = {f : f(n) != v}``."""
    index_set = sorted(set(index_set))
    if any(n < 1 for n in index_set):
        raise InvalidPrefixError("coordinates are 1-based")
    if index_set and index_set[-1] > depth:
        raise DepthError(f"index set reaches coordinate {index_set[-1]} beyond depth {depth}")
    missing = [n for n in index_set if n not in tau]
    if missing:
        raise InvalidPrefixError(f"tau undefined at {missing}")
    space.check_prefix({n: tau[n] for n in index_set})
    mask = np.ones(space.shape(depth), dtype=bool)
    for n in index_set:
        idx = (slice(None),) * (n - 1) + (tau[n] - 1,)
        mask[idx] = False
    return CylinderSet(space, depth, mask)


def preimage_pi(space: CylinderSpace, s: Prefix, target: CylinderSet) -> CylinderSet:
    """``pi_[s]^{-1}[B]`` for ``s`` on an initial segment ``[m]``.

    ``pi_[s]`` overwrites the first ``m`` coordinates by ``s``; a point lies in
    the preimage iff its overwrite lies in ``B``.
    """
    space.check_prefix(s)
    m = len(s)
    if set(s) != set(range(1, m + 1)):
        raise InvalidPrefixError("pi_[s] needs s defined on an initial segment [m]")
    d = max(m, target.depth)
    leaves = target.at_depth(d)
    section = leaves[tuple(s[i] - 1 for i in range(1, m + 1))]
    shape = space.shape(d)
    mask = np.broadcast_to(section.reshape((1,) * m + section.shape), shape)
    return CylinderSet(space, d, mask)


def basic_cylinders(space: CylinderSpace, depth: int) -> Iterator[dict[int, int]]:
    """Every prefix on ``[depth]``: the atoms ``A_depth`` of the level algebra."""
    for p in space.points(depth):
        yield {i + 1: v for i, v in enumerate(p)}


def check_size(count: int, cap: int, what: str) -> None:
    if count > cap:
        raise SizeCapError(f"{what}: {count} exceeds cap {cap}")
