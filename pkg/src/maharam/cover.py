"""D-sets, proper covers, rectangles and spikes, and an exact minimum-weight cover search."""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .algebra import CylinderSet, CylinderSpace, Prefix, cylinder_from_prefix
from .errors import DepthError, InfeasibleError, PreconditionError, RangeError
from .weights import ExactWeight, Schedule, compare, require_decided


def talagrand_branching(n: int) -> int:
    return 2**n


@dataclass(frozen=True, order=True)
class DSet:
    """``bigcap_{n in I} S_{n, tau(n)}``; ordering is ``(I, tau on I)``."""

    index_set: tuple[int, ...]
    values: tuple[int, ...]

    def __post_init__(self):
        if not self.index_set:
            raise PreconditionError("a D-set needs a nonempty index set")
        if len(self.values) != len(self.index_set):
            raise PreconditionError("tau must be defined exactly on the index set")
        if list(self.index_set) != sorted(set(self.index_set)) or self.index_set[0] < 1:
            raise PreconditionError("index set must be strictly increasing 1-based coordinates")
        if any(v < 1 for v in self.values):
            raise PreconditionError("values are 1-based")

    @classmethod
    def of(cls, tau: Mapping[int, int]) -> "DSet":
        items = sorted(tau.items())
        return cls(tuple(i for i, _ in items), tuple(v for _, v in items))

    @property
    def tau(self) -> dict[int, int]:
        return dict(zip(self.index_set, self.values))

    @property
    def size(self) -> int:
        return len(self.index_set)

    @property
    def depth(self) -> int:
        return self.index_set[-1]

    def check_space(self, space: CylinderSpace) -> None:
        space.check_prefix(self.tau)

    def mask(self, space: CylinderSpace, depth: int) -> np.ndarray:
        if self.depth > depth:
            raise DepthError(f"D-set reaches coordinate {self.depth} beyond depth {depth}")
        m = np.ones(space.shape(depth), dtype=bool)
        for n, v in zip(self.index_set, self.values):
            m[(slice(None),) * (n - 1) + (v - 1,)] = False
        return m

    def cylinder(self, space: CylinderSpace, depth: int | None = None) -> CylinderSet:
        self.check_space(space)
        d = self.depth if depth is None else depth
        return CylinderSet(space, d, self.mask(space, d))

    def contains(self, point: Sequence[int]) -> bool:
        return all(point[n - 1] != v for n, v in zip(self.index_set, self.values))

    def to_json(self) -> dict:
        return {"I": list(self.index_set), "tau": list(self.values)}

    @classmethod
    def from_json(cls, obj) -> "DSet":
        return cls(tuple(int(i) for i in obj["I"]), tuple(int(v) for v in obj["tau"]))


@dataclass(frozen=True)
class WeightedSet:
    dset: DSet
    weight: ExactWeight

    @property
    def index_card(self) -> int:
        return self.dset.size


def weighted(schedule: Schedule, dset: DSet) -> WeightedSet:
    return WeightedSet(dset, schedule.weight(dset.size))


def family_weight(schedule: Schedule, family: Iterable[DSet], k_limit: int | None = None) -> ExactWeight:
    total = ExactWeight.zero()
    for x in family:
        total = total + schedule.member_weight(x.size, k_limit)
    return total


# ---------------------------------------------------------------------------
# rectangles and spikes


def make_rectangle(
    N: int,
    index_set: Iterable[int],
    branching: Callable[[int], int] = talagrand_branching,
    rng=None,
) -> list[DSet]:
    """``N`` D-sets on a common ``(N-1)``-set with pairwise distinct values per coordinate.

    Row ``r`` takes value ``r`` everywhere unless ``rng`` is given, in which
    case each column is an independent random choice of ``N`` distinct values.
    """
    I = tuple(sorted(set(index_set)))
    if N < 2:
        raise PreconditionError("a rectangle has at least two rows")
    if len(I) != N - 1:
        raise PreconditionError(f"an {N}-rectangle needs an index set of size {N - 1}")
    for n in I:
        if branching(n) < N:
            raise InfeasibleError(f"coordinate {n} has {branching(n)} values, fewer than {N}")
    columns = []
    for n in I:
        if rng is None:
            columns.append(list(range(1, N + 1)))
        else:
            columns.append([int(v) + 1 for v in rng.choice(branching(n), size=N, replace=False)])
    return [DSet(I, tuple(col[r] for col in columns)) for r in range(N)]


def rectangle_weight(schedule: Schedule, N: int) -> ExactWeight:
    """``N * w(N - 1)``."""
    return schedule.weight(N - 1) * N


def make_spike(
    index_set: Iterable[int],
    prefixes: Sequence[Prefix],
    J: Iterable[int],
    branching: Callable[[int], int] = talagrand_branching,
) -> DSet:
    """The least D-set on ``J`` avoiding, at every ``j``, the value ``s(j)`` of each ``s``."""
    I = set(index_set)
    J = sorted(set(J))
    if not J:
        raise PreconditionError("J must be nonempty")
    if not set(J) <= I:
        raise PreconditionError("J must be a subset of I")
    for s in prefixes:
        if set(s) != I:
            raise PreconditionError("every prefix must have domain I")
    tau = {}
    for j in J:
        used = {s[j] for s in prefixes}
        free = [v for v in range(1, branching(j) + 1) if v not in used]
        if not free:
            raise InfeasibleError(f"all {branching(j)} values at coordinate {j} are taken")
        tau[j] = free[0]
    return DSet.of(tau)


# ---------------------------------------------------------------------------
# covers


def _as_cylinder(member, space: CylinderSpace) -> CylinderSet:
    return member.cylinder(space) if isinstance(member, DSet) else member


@dataclass(frozen=True)
class CoverCheck:
    status: str  # "proper" | "improper" | "not-cover"
    witness: object = None

    @property
    def proper(self) -> bool:
        return self.status == "proper"


def is_proper_cover(family: Sequence, target: CylinderSet, space: CylinderSpace | None = None) -> CoverCheck:
    """Classify ``family`` as a proper cover of ``target``.

    ``not-cover`` carries the first uncovered leaf (1-based, at the common
    depth); ``improper`` carries the positions of a covering subfamily with
    one member removed.
    """
    space = space or target.space
    sets = [_as_cylinder(m, space) for m in family]
    depth = max([target.depth] + [c.depth for c in sets])
    space.check_depth(depth)
    tbits = target.bits(depth)
    bits = [c.bits(depth) for c in sets]
    union = 0
    for b in bits:
        union |= b
    missing = tbits & ~union
    if missing:
        k = (missing & -missing).bit_length() - 1
        point = tuple(int(i) + 1 for i in np.unravel_index(k, space.shape(depth)))
        return CoverCheck("not-cover", point)
    # suffix/prefix unions give every one-removed union in linear time
    m = len(bits)
    pre = [0] * (m + 1)
    suf = [0] * (m + 1)
    for i in range(m):
        pre[i + 1] = pre[i] | bits[i]
        suf[m - 1 - i] = suf[m - i] | bits[m - 1 - i]
    for i in range(m):
        if tbits & ~(pre[i] | suf[i + 1]) == 0:
            return CoverCheck("improper", tuple(j for j in range(m) if j != i))
    return CoverCheck("proper")


@dataclass(frozen=True)
class CDRResult:
    representatives: dict[int, int] | None = None
    deficient: tuple[int, ...] | None = None

    @property
    def exists(self) -> bool:
        return self.representatives is not None


def cdr_find(index_sets: Sequence[Iterable[int]]) -> CDRResult:
    """A complete system of distinct representatives, or a Hall-deficient subfamily.

    Positions are 1-based.  A deficient ``J`` satisfies ``|U_{i in J} I_i| < |J|``.
    """
    sets = [sorted(set(s)) for s in index_sets]
    owner: dict[int, int] = {}  # element -> position (0-based)

    def augment(i: int, seen: set[int]) -> bool:
        for x in sets[i]:
            if x in seen:
                continue
            seen.add(x)
            if x not in owner or augment(owner[x], seen):
                owner[x] = i
                return True
        return False

    for i in range(len(sets)):
        if not augment(i, set()):
            # left vertices reachable from i by alternating paths
            reach = {i}
            stack = [i]
            while stack:
                u = stack.pop()
                for x in sets[u]:
                    j = owner.get(x)
                    if j is not None and j not in reach:
                        reach.add(j)
                        stack.append(j)
            return CDRResult(deficient=tuple(sorted(j + 1 for j in reach)))
    return CDRResult(representatives={i + 1: x for x, i in sorted(owner.items(), key=lambda t: t[1])})


@dataclass(frozen=True)
class HallCheck:
    passed: bool
    union_size: int
    family_size: int


def hall_bound_check(family: Sequence[DSet], space: CylinderSpace | None = None, check_cover: bool = True) -> HallCheck:
    """``|U I_i| <= |family| - 1`` for a proper cover of the whole space."""
    if check_cover:
        depth = max(x.depth for x in family)
        space = space or CylinderSpace.talagrand(depth)
        res = is_proper_cover(family, space.full(), space)
        if not res.proper:
            raise PreconditionError(f"family is not a proper cover of the space ({res.status})")
    union = set().union(*(x.index_set for x in family))
    return HallCheck(len(union) <= len(family) - 1, len(union), len(family))


def random_proper_cover(rng, depth: int, space: CylinderSpace | None = None, max_index: int = 3) -> list[DSet]:
    """Add random D-sets until the space is covered, then drop redundant members at random."""
    space = space or CylinderSpace.talagrand(depth)
    full = (1 << space.n_leaves(depth)) - 1
    family: list[DSet] = []
    bits: list[int] = []
    union = 0
    while union != full:
        size = int(rng.integers(1, min(max_index, depth) + 1))
        I = tuple(sorted(int(i) + 1 for i in rng.choice(depth, size=size, replace=False)))
        vals = tuple(int(rng.integers(1, space.branching[n - 1] + 1)) for n in I)
        x = DSet(I, vals)
        b = CylinderSet(space, depth, x.mask(space, depth)).bits(depth)
        family.append(x)
        bits.append(b)
        union |= b
    order = list(rng.permutation(len(family)))
    keep = set(range(len(family)))
    for i in order:
        rest = 0
        for j in keep:
            if j != i:
                rest |= bits[j]
        if rest == full:
            keep.discard(i)
    return [family[i] for i in sorted(keep)]


# ---------------------------------------------------------------------------
# exact minimum-weight cover


@dataclass(frozen=True)
class CoverResult:
    cover: tuple[DSet, ...]
    weight: ExactWeight
    universe_size: int = field(default=0, compare=False)

    def to_json(self) -> dict:
        from .weights import weight_to_json

        return {"cover": [x.to_json() for x in self.cover], "weight": weight_to_json(self.weight)}


def enumerate_universe(schedule: Schedule, depth: int, k_limit: int | None = None,
                       branching: Callable[[int], int] = talagrand_branching) -> list[DSet]:
    """Every D-set with ``I <= [depth]`` carried by some level ``k <= k_limit``."""
    top = schedule.k_max if k_limit is None else min(k_limit, schedule.k_max)
    out = []
    for size in range(1, depth + 1):
        if not schedule.eta_at_least(top, size):
            break
        for I in itertools.combinations(range(1, depth + 1), size):
            for vals in itertools.product(*(range(1, branching(n) + 1) for n in I)):
                out.append(DSet(I, vals))
    return out


_EPS = 1e-9


def _words(x: int, n_words: int) -> np.ndarray:
    return np.frombuffer(x.to_bytes(8 * n_words, "little"), dtype="<u8")


def _words_to_bool(x: int, n: int) -> np.ndarray:
    raw = np.frombuffer(x.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


class _Search:
    """Depth-first branch and bound over leaf bitsets.

    Weights are steered by floats on a common scale but every complete cover
    is compared exactly; pruning only drops nodes whose float lower bound
    exceeds the incumbent by a relative margin far above float error, so all
    exact minimisers (and hence the least one) are visited.
    """

    def __init__(self, covs, keys, wf, classes, class_weights, target):
        self.covs = covs
        self.keys = keys
        self.wf = wf
        self.wf_arr = np.array(wf)
        self.classes = classes
        self.class_weights = class_weights
        self.target = target
        self.n_words = max(1, (target.bit_length() + 63) // 64)
        self.cw = np.stack([_words(c, self.n_words) for c in covs]) if covs else np.zeros((0, 1), "<u8")
        pcs = [c.bit_count() for c in covs]
        self.order = sorted(range(len(covs)), key=lambda c: (wf[c] / pcs[c], keys[c]))
        self._by_leaf: dict[int, list[int]] = {}
        n_leaves = target.bit_length()
        unpacked = np.unpackbits(self.cw.view(np.uint8), axis=1, bitorder="little")[:, :n_leaves]
        counts = unpacked.sum(axis=0)
        leaves = np.flatnonzero(_words_to_bool(target, n_leaves))
        self.leaf_order = [int(e) for e in leaves[np.lexsort((leaves, counts[leaves]))]]
        self.best = None  # (exact, key, members, float)
        self.cap = math.inf
        self.ties = True
        self.nodes = 0

    def exact(self, members) -> ExactWeight:
        counts: dict[int, int] = {}
        for c in members:
            counts[self.classes[c]] = counts.get(self.classes[c], 0) + 1
        total = ExactWeight.zero()
        for j in sorted(counts):
            total = total + self.class_weights[j] * counts[j]
        return total

    def family_key(self, members):
        return (len(members), tuple(sorted(self.keys[c] for c in members)))

    def offer(self, members) -> None:
        wf = sum(self.wf[c] for c in members)
        if self.best is not None and wf > self.best[3] * (1 + _EPS) + _EPS:
            return
        w = self.exact(members)
        key = self.family_key(members)
        if self.best is None:
            self.best = (w, key, tuple(members), wf)
            return
        order = require_decided(compare(w, self.best[0])).order
        if order == "less" or (order == "equal" and key < self.best[1]):
            self.best = (w, key, tuple(members), wf)

    def limit(self) -> float:
        if self.best is None:
            inc = math.inf
        elif self.ties:
            inc = self.best[3] * (1 + _EPS) + _EPS
        else:
            inc = self.best[3] * (1 - _EPS)
        return min(inc, self.cap)

    def greedy(self) -> None:
        U = self.target
        chosen = []
        while U:
            c = min(
                (c for c in range(len(self.covs)) if self.covs[c] & U),
                key=lambda c: (self.wf[c] / (self.covs[c] & U).bit_count(), self.keys[c]),
            )
            chosen.append(c)
            U &= ~self.covs[c]
        self.offer(chosen)

    def by_leaf(self, e: int) -> list[int]:
        lst = self._by_leaf.get(e)
        if lst is None:
            lst = [c for c in self.order if (self.covs[c] >> e) & 1]
            self._by_leaf[e] = lst
        return lst

    def branches(self, U: int, excl: np.ndarray, wsum: float):
        e = next(e for e in self.leaf_order if (U >> e) & 1)
        room = self.limit() - wsum
        return [c for c in self.by_leaf(e) if not excl[c] and self.wf[c] <= room]

    def lower_bound(self, U: int, excl: np.ndarray) -> float:
        pcs = np.bitwise_count(self.cw & _words(U, self.n_words)).sum(axis=1)
        live = (pcs > 0) & ~excl
        if not live.any():
            return math.inf
        pc = pcs[live]
        w = self.wf_arr[live]
        size = U.bit_count()
        density = size * float((w / pc).min())
        need = -(-size // int(pc.max()))
        if need > len(w):
            return math.inf
        fewest = float(np.partition(w, need - 1)[:need].sum()) if need > 1 else float(w.min())
        return max(density, fewest)

    def dfs(self, U: int, chosen: list[int], wsum: float, excl: np.ndarray) -> None:
        self.nodes += 1
        if not U:
            self.offer(chosen)
            return
        if wsum + self.lower_bound(U, excl) > self.limit():
            return
        cands = self.branches(U, excl, wsum)
        if not cands:
            return
        excl = excl.copy()
        for c in cands:
            if wsum + self.wf[c] <= self.limit():
                chosen.append(c)
                self.dfs(U & ~self.covs[c], chosen, wsum + self.wf[c], excl)
                chosen.pop()
            excl[c] = True

    def run(self, U: int, chosen: list[int], wsum: float, excl: np.ndarray) -> None:
        """Improve under increasing caps, then sweep the near-ties of the optimum.

        The improving phase ignores covers that do not beat the incumbent by a
        float margin; the sweep then visits every cover within that margin so
        the exact minimum and its least witness are both found.
        """
        root = wsum + self.lower_bound(U, excl)
        if not math.isfinite(root):
            return
        self.ties = False
        cap = max(root, _EPS) * 1.0625
        while True:
            self.cap = cap
            self.dfs(U, list(chosen), wsum, excl)
            if self.best is not None and self.best[3] <= cap:
                break
            if self.best is not None and cap > self.best[3]:
                break
            cap *= 1.25
        self.cap = math.inf
        self.ties = True
        self.dfs(U, list(chosen), wsum, excl)


def _prune_universe(covs, classes, keys, ranks):
    """Drop sets covered by a set that is no heavier and earlier in the tie order."""
    # identical coverage: keep the least (rank, key)
    best: dict[int, int] = {}
    for c in range(len(covs)):
        b = covs[c]
        if b not in best or (ranks[classes[c]], keys[c]) < (ranks[classes[best[b]]], keys[best[b]]):
            best[b] = c
    alive = sorted(best.values(), key=lambda c: (-covs[c].bit_count(), ranks[classes[c]], keys[c]))
    kept: list[int] = []
    for c in alive:
        cov, rk = covs[c], (ranks[classes[c]], keys[c])
        if any(covs[d] & cov == cov and (ranks[classes[d]], keys[d]) < rk for d in kept):
            continue
        kept.append(c)
    return sorted(kept, key=lambda c: keys[c])


def min_weight_cover(
    schedule: Schedule,
    target: CylinderSet,
    depth: int,
    k_limit: int | None = None,
    threads: int = 1,
    branching: Callable[[int], int] = talagrand_branching,
) -> CoverResult:
    """Exact minimum of ``w`` over covers of ``target`` by D-sets with ``I <= [depth]``.

    Members carry the least weight available at a level ``k <= k_limit``.  The
    witness is the least minimiser under ``(family size, sorted member keys)``.
    """
    space = target.space
    D = max(depth, target.depth)
    space.check_depth(D)
    if any(branching(n) != space.branching[n - 1] for n in range(1, D + 1)):
        raise PreconditionError("target space does not match the D-set branching")
    if target.is_empty():
        return CoverResult((), ExactWeight.zero(), 0)
    universe, class_weights, ranks, useful, bits = _universe_data(schedule, depth, k_limit, branching, space, D)
    sizes = sorted(class_weights)
    tbits = target.bits(D)
    covs, keys, classes, members = [], [], [], []
    for x, b in zip(universe, bits):
        if x.size not in useful:
            continue
        cov = b & tbits
        if cov:
            covs.append(cov)
            keys.append((x.index_set, x.values))
            classes.append(x.size)
            members.append(x)
    union = 0
    for c in covs:
        union |= c
    if union != tbits:
        raise InfeasibleError("target is not covered by the restricted universe")
    kept = _prune_universe(covs, classes, keys, ranks)
    covs = [covs[c] for c in kept]
    keys = [keys[c] for c in kept]
    classes = [classes[c] for c in kept]
    members = [members[c] for c in kept]
    logs = {j: class_weights[j].approx_log2() for j in sizes}
    ref = min(logs.values())
    wf = [2.0 ** (logs[classes[c]] - ref) for c in range(len(covs))]

    def make():
        return _Search(covs, keys, wf, classes, class_weights, tbits)

    search = make()
    search.greedy()
    no_excl = np.zeros(len(covs), dtype=bool)
    if threads <= 1:
        search.run(tbits, [], 0.0, no_excl)
        best = search.best
    else:
        seed = search.best
        roots = search.branches(tbits, no_excl, 0.0)

        def run(i: int):
            s = make()
            s.best = seed
            c = roots[i]
            excl = no_excl.copy()
            excl[roots[:i]] = True
            s.run(tbits & ~covs[c], [c], wf[c], excl)
            return s.best

        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(run, range(len(roots))))
        best = seed
        for res in results:
            order = require_decided(compare(res[0], best[0])).order
            if order == "less" or (order == "equal" and res[1] < best[1]):
                best = res
    cover = tuple(sorted(members[c] for c in best[2]))
    return CoverResult(cover, best[0], len(covs))


_UNIVERSE_CACHE: dict = {}


def _universe_data(schedule, depth, k_limit, branching, space, D):
    key = (schedule, depth, k_limit, branching, space.branching[:D], D)
    hit = _UNIVERSE_CACHE.get(key)
    if hit is not None:
        return hit
    universe = enumerate_universe(schedule, depth, k_limit, branching)
    sizes = sorted({x.size for x in universe})
    class_weights = {j: schedule.member_weight(j, k_limit) for j in sizes}
    ordered = _exact_sort(sorted(sizes, key=lambda j: class_weights[j].approx_log2()), class_weights)
    ranks: dict[int, int] = {}
    r = 0
    for i, j in enumerate(ordered):
        if i and require_decided(compare(class_weights[ordered[i - 1]], class_weights[j])).order != "equal":
            r += 1
        ranks[j] = r
    # a size whose weight is not below every smaller size's weight is dominated
    # by a prefix of its own index set
    useful = {
        j for j in sizes
        if all(require_decided(compare(class_weights[j], class_weights[i])).order == "less" for i in sizes if i < j)
    }
    bits = [_dset_bits(space, D, x) if x.size in useful else 0 for x in universe]
    if len(_UNIVERSE_CACHE) > 32:
        _UNIVERSE_CACHE.clear()
    out = (universe, class_weights, ranks, useful, bits)
    _UNIVERSE_CACHE[key] = out
    return out


def _exact_sort(items: list[int], weights: Mapping[int, ExactWeight]) -> list[int]:
    out = list(items)
    # insertion sort with exact comparisons; the lists are tiny
    for i in range(1, len(out)):
        j = i
        while j and require_decided(compare(weights[out[j - 1]], weights[out[j]])).order == "greater":
            out[j - 1], out[j] = out[j], out[j - 1]
            j -= 1
    return out


def _dset_bits(space: CylinderSpace, depth: int, x: DSet) -> int:
    flat = x.mask(space, depth).reshape(-1)
    return int.from_bytes(np.packbits(flat, bitorder="little").tobytes(), "little")


def psi_oracle(schedule: Schedule, space: CylinderSpace, depth: int, k_limit: int | None = None,
               threads: int = 1) -> Callable[[CylinderSet], ExactWeight]:
    """The restricted cover submeasure as a callable on clopen sets."""
    cache: dict[CylinderSet, ExactWeight] = {}

    def mu(x: CylinderSet) -> ExactWeight:
        if x not in cache:
            cache[x] = min_weight_cover(schedule, x, depth, k_limit, threads).weight
        return cache[x]

    return mu


def psi_cylinder_oracle(schedule: Schedule, s: Prefix, depth: int, k_limit: int | None = None) -> CoverResult:
    space = CylinderSpace.talagrand(max(depth, max(s, default=0)))
    return min_weight_cover(schedule, cylinder_from_prefix(space, s, space.max_depth), depth, k_limit)


# ---------------------------------------------------------------------------
# thinness


@dataclass(frozen=True)
class ThinWitness:
    prefix: tuple[int, ...]
    witness: CylinderSet | None
    value: object


@dataclass(frozen=True)
class ThinResult:
    passed: bool
    witnesses: tuple[ThinWitness, ...]


def is_thin(space: CylinderSpace, X: CylinderSet, m: int, n: int, mu: Callable[[CylinderSet], object]) -> ThinResult:
    """Decide ``(m, n, mu)``-thinness of ``X``.

    For ``A = [s]`` with ``s`` on ``[m]`` the largest admissible ``B`` is the
    union of the depth-``n`` cylinders inside ``A`` missing ``X``; since ``mu``
    and preimages are monotone it is the only candidate that needs testing.
    """
    from .algebra import basic_cylinders, preimage_pi

    if not 0 <= m < n:
        raise RangeError("thinness needs 0 <= m < n")
    d = max(n, X.depth)
    space.check_depth(d)
    xs = X.at_depth(d)
    # a depth-n cylinder misses X iff all of its leaves at depth d do
    extra = tuple(range(n, d))
    free = ~xs.any(axis=extra) if extra else ~xs
    out = []
    ok = True
    for s in basic_cylinders(space, m):
        A = cylinder_from_prefix(space, s, m)
        region = A.at_depth(n) & free
        if not region.any():
            out.append(ThinWitness(tuple(s[i] for i in sorted(s)), None, Fraction(0)))
            ok = False
            continue
        B = CylinderSet(space, n, region)
        val = mu(preimage_pi(space, s, B))
        good = val >= 1
        ok = ok and bool(good)
        out.append(ThinWitness(tuple(s[i] for i in sorted(s)), B, val))
    return ThinResult(ok, tuple(out))
