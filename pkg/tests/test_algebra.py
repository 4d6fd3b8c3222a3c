import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from maharam.algebra import (
    CylinderSet,
    CylinderSpace,
    FiniteAlgebra,
    atoms_of,
    cylinder_from_prefix,
    dset_to_cylinder,
    element_of,
    generate_subalgebra,
    is_partition,
    preimage_pi,
)
from maharam.errors import DepthError, InvalidPrefixError, PreconditionError
from oracles import closure_atoms

T = CylinderSpace.talagrand(4)


def test_finite_algebra_basics():
    alg = FiniteAlgebra(3)
    assert alg.size == 8 and alg.one == 0b111 and alg.zero == 0
    assert alg.complement(0b101) == 0b010
    assert atoms_of(0b101) == (1, 3) and element_of([1, 3]) == 0b101
    assert sorted(alg.below(0b101)) == [0, 1, 4, 5]
    with pytest.raises(PreconditionError):
        FiniteAlgebra(0)


def test_generate_subalgebra_examples():
    alg = FiniteAlgebra(4)
    assert generate_subalgebra(alg, []) == [alg.one]
    assert generate_subalgebra(alg, [0b0011]) == [0b0011, 0b1100]
    assert generate_subalgebra(alg, [0b0011, 0b0110]) == [1, 2, 4, 8]


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 6).flatmap(lambda n: st.tuples(st.just(n), st.lists(st.integers(0, (1 << n) - 1), max_size=4))))
def test_generate_subalgebra_matches_closure(case):
    n, elems = case
    alg = FiniteAlgebra(n)
    atoms = generate_subalgebra(alg, elems)
    assert is_partition(alg, atoms)
    assert atoms == closure_atoms(n, elems)
    for e in elems:
        assert sum(a for a in atoms if a & e) == e


@settings(max_examples=200, deadline=None)
@given(st.integers(1, 8).flatmap(lambda n: st.tuples(st.just(n), *(st.integers(0, (1 << n) - 1),) * 3)))
def test_element_lattice_laws(case):
    n, a, b, c = case
    alg = FiniteAlgebra(n)
    cm = alg.complement
    assert cm(a | b) == cm(a) & cm(b)
    assert cm(a & b) == cm(a) | cm(b)
    assert a & (b | c) == (a & b) | (a & c)
    assert a | (a & b) == a
    assert cm(cm(a)) == a


def test_cylinder_from_prefix_examples():
    assert cylinder_from_prefix(T, {}, 2).leaf_count(2) == 8
    assert cylinder_from_prefix(T, {1: 1}, 1).leaf_count(1) == 1
    c = cylinder_from_prefix(T, {2: 3}, 2)
    assert c.leaf_count(2) == 2
    assert c.leaves(2) == [(1, 3), (2, 3)]
    with pytest.raises(InvalidPrefixError):
        cylinder_from_prefix(T, {1: 3}, 2)
    with pytest.raises(DepthError):
        cylinder_from_prefix(T, {3: 1}, 2)


def test_dset_to_cylinder_examples():
    assert dset_to_cylinder(T, [1], {1: 1}, 1).leaves(1) == [(2,)]
    assert dset_to_cylinder(T, [], {}, 2).is_full()
    assert dset_to_cylinder(T, [1, 2], {1: 1, 2: 1}, 2).leaf_count(2) == 3
    with pytest.raises(DepthError):
        dset_to_cylinder(T, [3], {3: 1}, 2)


@pytest.mark.parametrize("d", [1, 2, 3, 4])
def test_dset_leaf_count_formula(d):
    for size in range(1, d + 1):
        for I in itertools.combinations(range(1, d + 1), size):
            tau = {n: 1 for n in I}
            expected = 1
            for n in range(1, d + 1):
                expected *= 2**n - (1 if n in I else 0)
            assert dset_to_cylinder(T, I, tau, d).leaf_count(d) == expected


def test_canonical_depth_and_expansion():
    c = cylinder_from_prefix(T, {1: 2}, 3)
    assert c.depth == 1
    assert c == CylinderSet(T, 3, c.at_depth(3))
    assert c.leaf_count(3) == c.leaf_count(1) * 4 * 8
    assert CylinderSet.from_bits(T, 3, c.bits(3)) == c


def _random_set(rng, depth):
    return CylinderSet(T, depth, rng.random(T.shape(depth)) < 0.5)


def test_cylinder_boolean_laws_random():
    rng = np.random.default_rng(7)
    for _ in range(200):
        d = int(rng.integers(1, 4))
        a, b, c = (_random_set(rng, int(rng.integers(0, d + 1))) for _ in range(3))
        assert ~(a | b) == (~a & ~b)
        assert ~(a & b) == (~a | ~b)
        assert a & (b | c) == (a & b) | (a & c)
        assert (a - b) == (a & ~b)
        assert (a & b) <= a <= (a | b)


def test_preimage_examples():
    s = {1: 1}
    A = cylinder_from_prefix(T, s, 1)
    assert preimage_pi(T, s, A).is_full()
    assert preimage_pi(T, s, T.empty()).is_empty()
    B = cylinder_from_prefix(T, {2: 1}, 2)
    assert preimage_pi(T, s, B) == B
    with pytest.raises(InvalidPrefixError):
        preimage_pi(T, {2: 1}, B)


def test_preimage_is_homomorphism_exhaustive_depth2():
    space = CylinderSpace.talagrand(2)
    sets = [CylinderSet.from_bits(space, 2, b) for b in range(1 << 8)]
    for s in ({1: 1}, {1: 2}):
        pre = [preimage_pi(space, s, x) for x in sets]
        for i, x in enumerate(sets):
            assert preimage_pi(space, s, ~x) == ~pre[i]
        for i in range(0, 256, 5):
            for j in range(0, 256, 3):
                assert preimage_pi(space, s, sets[i] | sets[j]) == pre[i] | pre[j]
                assert preimage_pi(space, s, sets[i] & sets[j]) == pre[i] & pre[j]


def test_preimage_is_homomorphism_depth3_random():
    rng = np.random.default_rng(3)
    space = CylinderSpace.talagrand(3)
    for _ in range(100):
        m = int(rng.integers(1, 3))
        s = {i: int(rng.integers(1, 2**i + 1)) for i in range(1, m + 1)}
        a = CylinderSet(space, 3, rng.random(space.shape(3)) < 0.5)
        b = CylinderSet(space, 3, rng.random(space.shape(3)) < 0.5)
        assert preimage_pi(space, s, a | b) == preimage_pi(space, s, a) | preimage_pi(space, s, b)
        assert preimage_pi(space, s, a & b) == preimage_pi(space, s, a) & preimage_pi(space, s, b)
        assert preimage_pi(space, s, ~a) == ~preimage_pi(space, s, a)


def test_depth_cap():
    with pytest.raises(DepthError):
        CylinderSpace.talagrand(6).check_depth(7)
    with pytest.raises(DepthError):
        CylinderSpace.talagrand(6, max_leaves=1000).check_depth(5)


def test_leaves_at_depth_zero():
    sp = CylinderSpace.talagrand(2)
    assert sp.full().leaves() == [()]
    assert sp.empty().leaves() == []
    assert len(sp.full().leaves(2)) == 8
