import itertools
import random
from fractions import Fraction as F

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from maharam.algebra import FiniteAlgebra
from maharam.errors import FormatError, PreconditionError, RangeError, SizeCapError
from maharam.submeasure import Submeasure, validate
from maharam.transform import (
    Chain,
    GoodMap,
    SignedMeasure,
    StarFreeAlgebra,
    build_levels,
    canonical_subsets,
    embedding,
    explicit_f,
    explicit_f_map,
    f_generated_by,
    generators_of,
    incidence_by_blocks,
    incidence_determinant,
    incidence_matrix,
    pullback_submeasure,
    recursive_subsets,
    round_trip_errors,
    solve_signed_measure,
    star_free_check,
    transform_functional,
    unbounded_example,
    unbounded_value,
)
from oracles import mobius_signed_measure


def by_label(lam: SignedMeasure) -> dict:
    return dict(zip(lam.labels, lam.atom_values))


def random_functional(rng: random.Random, n: int) -> list[F]:
    return [F(0)] + [F(rng.randint(-20, 20), rng.randint(1, 9)) for _ in range((1 << n) - 1)]


# worked examples


def test_three_quarters_example():
    lam = solve_signed_measure([0, F(3, 4), F(3, 4), 1])
    assert by_label(lam) == {"[1]": F(1, 4), "[2]": F(1, 4), "[1,2]": F(1, 2)}


def test_additive_input_stays_on_singletons():
    masses = [F(1, 5), F(1, 3), F(2, 7)]
    vals = [sum((masses[i] for i in range(3) if a >> i & 1), F(0)) for a in range(8)]
    lam = by_label(solve_signed_measure(vals))
    for i in range(3):
        assert lam[f"[{i + 1}]"] == masses[i]
    assert all(v == 0 for k, v in lam.items() if "," in k)


def test_half_example_on_three_atoms():
    vals = [F(0)] + [F(1, 2)] * 6 + [F(1)]
    lam = by_label(solve_signed_measure(vals))
    assert all(lam[f"[{i}]"] == F(1, 2) for i in (1, 2, 3))
    assert all(lam[k] == F(-1, 2) for k in ("[1,2]", "[1,3]", "[2,3]"))
    assert lam["[1,2,3]"] == 1


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_unbounded_example(n):
    ex = unbounded_example(n)
    assert ex.value == unbounded_value(n) == -F(n * (n - 1) // 2, 2)
    assert sum(ex.lam.atom_values) == 1
    assert not round_trip_errors(ex.mu, ex.lam)


def test_unbounded_example_range():
    assert unbounded_example(3).value == F(-3, 2)
    assert unbounded_example(4).value == -3
    with pytest.raises(RangeError):
        unbounded_example(2)


# solving


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_solve_matches_mobius_oracle(n):
    rng = random.Random(n)
    for _ in range(10):
        vals = random_functional(rng, n)
        lam = solve_signed_measure(vals)
        ref = mobius_signed_measure(vals, n)
        sfr = StarFreeAlgebra(n)
        assert [ref[y] for y in sfr.subsets] == list(lam.atom_values)


functionals = st.integers(1, 5).flatmap(
    lambda n: st.lists(st.fractions(min_value=-10, max_value=10, max_denominator=12), min_size=(1 << n) - 1, max_size=(1 << n) - 1)
).map(lambda v: [F(0)] + v)


@settings(max_examples=200, deadline=None)
@given(functionals, functionals, st.fractions(max_denominator=9), st.fractions(max_denominator=9))
def test_round_trip_and_linearity(v1, v2, a, b):
    lam1 = solve_signed_measure(v1)
    assert round_trip_errors(v1, lam1) == []
    if len(v1) == len(v2):
        combo = [a * x + b * y for x, y in zip(v1, v2)]
        lam2 = solve_signed_measure(v2)
        assert solve_signed_measure(combo) == lam1.scaled(a) + lam2.scaled(b)


def test_uniqueness_perturbation():
    rng = random.Random(1)
    for n in (2, 3, 4):
        vals = random_functional(rng, n)
        lam = solve_signed_measure(vals)
        for p in range(lam.n_atoms):
            bumped = list(lam.atom_values)
            bumped[p] += F(1, 7)
            assert round_trip_errors(vals, SignedMeasure(tuple(bumped), lam.labels))


def test_relabel_equivariance():
    rng = random.Random(2)
    for n in (2, 3, 4):
        for perm in itertools.permutations(range(n)):
            vals = random_functional(rng, n)

            def move(m):
                return sum(1 << perm[i] for i in range(n) if m >> i & 1)

            moved = [F(0)] * (1 << n)
            for q in range(1 << n):
                moved[q] = vals[move(q)]
            lam, lam2 = solve_signed_measure(vals), solve_signed_measure(moved)
            sfr = StarFreeAlgebra(n)
            for y in sfr.subsets:
                assert lam2(sfr.atom(y)) == lam(sfr.atom(move(y)))
            if n == 4:
                break


def test_functional_formats():
    mapping = {1: F(3, 4), 2: F(3, 4), 3: 1}
    assert solve_signed_measure(mapping, n=2) == solve_signed_measure([0, F(3, 4), F(3, 4), 1])
    alg = FiniteAlgebra(2)
    mu = validate(alg, [0, F(3, 4), F(3, 4), 1])
    assert solve_signed_measure(mu) == solve_signed_measure(mapping, n=2)
    with pytest.raises(FormatError):
        solve_signed_measure([1, 0, 0, 0])
    with pytest.raises(FormatError):
        solve_signed_measure([0, 1, 1])
    with pytest.raises(FormatError):
        solve_signed_measure({1: 1}, n=2)
    with pytest.raises(FormatError):
        solve_signed_measure({1: 1})


def test_signed_measure_json():
    lam = solve_signed_measure([0, F(3, 4), F(3, 4), 1])
    assert lam.to_json() == {"atoms": {"[1]": "1/4", "[2]": "1/4", "[1,2]": "1/2"}}


# incidence matrices

DETERMINANTS = {1: 1, 2: -1, 3: -1, 4: -1, 5: -1, 6: -1, 7: -1, 8: -1}


@pytest.mark.parametrize("n", range(1, 8))
def test_incidence_determinant(n):
    assert incidence_determinant(n) == DETERMINANTS[n]


@pytest.mark.slow
def test_incidence_determinant_8():
    assert incidence_determinant(8) == DETERMINANTS[8]


@pytest.mark.parametrize("n", range(1, 6))
def test_determinant_matches_sympy(n):
    assert int(sympy.Matrix(incidence_matrix(n)).det()) == DETERMINANTS[n]


@pytest.mark.parametrize("n", range(1, 7))
def test_block_assembly(n):
    assert incidence_by_blocks(n) == incidence_matrix(n, "recursive")
    can, rec = canonical_subsets(n), recursive_subsets(n)
    assert sorted(can) == sorted(rec)
    pos = {y: p for p, y in enumerate(can)}
    A = incidence_matrix(n)
    permuted = [[A[pos[y]][pos[z]] for z in rec] for y in rec]
    assert permuted == incidence_by_blocks(n)


def test_canonical_order():
    assert [StarFreeAlgebra(3).labels()] == [["[1]", "[2]", "[3]", "[1,2]", "[1,3]", "[2,3]", "[1,2,3]"]]
    assert incidence_matrix(2) == [[1, 0, 1], [0, 1, 1], [1, 1, 1]]
    with pytest.raises(FormatError):
        incidence_matrix(2, "random")
    with pytest.raises(RangeError):
        incidence_matrix(0)


# star-free families


@pytest.mark.parametrize("n", range(1, 6))
def test_generators_are_star_free(n):
    sfr = StarFreeAlgebra(n)
    assert star_free_check(sfr.one, sfr.generators()).passed
    gm = GoodMap.canonical(n)
    assert [gm(1 << i) for i in range(n)] == sfr.generators()


def test_star_free_failures():
    res = star_free_check(0b111, [0b011, 0b110])
    assert res.passed
    res = star_free_check(0b111, [0b011, 0b111])
    assert not res.passed and res.reason == "empty pattern" and res.witness == (1,)
    res = star_free_check(0b111, [0b011])
    assert not res.passed and res.reason == "union"


# chains


def _additive(masses):
    n = len(masses)
    return tuple(sum((masses[i] for i in range(n) if a >> i & 1), F(0)) for a in range(1 << n))


def test_single_level_chain_reduces_to_solve():
    vals = (F(0), F(3, 4), F(3, 4), F(1))
    ch = Chain(FiniteAlgebra(2), ((0b01, 0b10),), vals)
    tr = transform_functional(ch)
    assert tr.lams == (solve_signed_measure(list(vals)),)
    assert tr.coherent


def test_additive_chain_two_in_four():
    masses = [F(1, 10), F(2, 10), F(3, 10), F(4, 10)]
    ch = Chain(FiniteAlgebra(4), ((0b0011, 0b1100), (1, 2, 4, 8)), _additive(masses))
    tr = transform_functional(ch)
    assert tr.coherent
    for lam in tr.lams:
        assert lam.is_nonnegative()
        assert all(v == 0 for lab, v in zip(lam.labels, lam.atom_values) if "," in lab)
    assert by_label(tr.lams[0]) == {"[1]": F(3, 10), "[2]": F(7, 10), "[1,2]": 0}


def test_three_quarters_refined():
    rng = random.Random(4)
    for _ in range(20):
        vals = [F(0)] + [F(rng.randint(0, 12), 12) for _ in range(15)]
        vals[0b0011] = vals[0b1100] = F(3, 4)
        vals[0b1111] = F(1)
        ch = Chain(FiniteAlgebra(4), ((0b0011, 0b1100), (0b0001, 0b0010, 0b1100)), tuple(vals))
        tr = transform_functional(ch)
        assert tr.coherent
        assert by_label(tr.lams[0]) == {"[1]": F(1, 4), "[2]": F(1, 4), "[1,2]": F(1, 2)}


def test_three_level_chain():
    rng = random.Random(6)
    vals = tuple([F(0)] + [F(rng.randint(-9, 9), 4) for _ in range(31)])
    levels = ((0b00111, 0b11000), (0b00011, 0b00100, 0b11000), (1, 2, 4, 8, 16))
    tr = transform_functional(Chain(FiniteAlgebra(5), levels, vals))
    assert tr.coherent
    assert set(tr.embeddings) == {(0, 1), (0, 2), (1, 2)}
    # composing embeddings agrees with the direct one
    e01, e12, e02 = tr.embeddings[(0, 1)], tr.embeddings[(1, 2)], tr.embeddings[(0, 2)]
    for p, img in enumerate(e01):
        comp = 0
        for q in range(len(e12)):
            if img >> q & 1:
                comp |= e12[q]
        assert comp == e02[p]
    js = tr.to_json()
    assert js["coherent"] is True and len(js["levels"]) == 3


def test_embedding_shape():
    ch = Chain(FiniteAlgebra(3), ((0b011, 0b100), (1, 2, 4)), _additive([F(1, 3)] * 3))
    imgs = embedding(ch, 0, 1)
    assert len(imgs) == 3 and all(imgs)
    assert sum(bin(m).count("1") for m in imgs) == 7


def test_chain_preconditions():
    alg = FiniteAlgebra(3)
    vals = _additive([F(1, 3)] * 3)
    with pytest.raises(PreconditionError):
        Chain(alg, ((1, 2, 4), (0b011, 0b100)), vals)
    with pytest.raises(PreconditionError):
        Chain(alg, ((0b011, 0b100), (0b001, 0b110)), vals)
    with pytest.raises(PreconditionError):
        Chain(alg, ((0b011, 0b110),), vals)
    with pytest.raises(PreconditionError):
        Chain(alg, (), vals)


# level systems and the explicit map


def test_level_sizes():
    assert len(build_levels([2], 1).levels[0]) == 3
    assert [len(T) for T in build_levels([2, 2], 2).levels] == [3, 9]
    assert len(build_levels([3], 1).levels[0]) == 7
    assert [len(T) for T in build_levels([2, 3], 2).levels] == [3, 49]
    with pytest.raises(SizeCapError):
        build_levels([2, 2, 2, 2, 2], 5)
    with pytest.raises(RangeError):
        build_levels([2], 2)


def test_level_members_hit_every_fiber():
    L = build_levels([2, 2, 2], 3)
    for i in range(2, 4):
        for S in L.level_sets(i):
            parents = {t[:-1] for t in S}
            assert parents == set(L.prefixes[i - 2])


def test_explicit_f_examples():
    L = build_levels([2, 2], 2)
    assert len(explicit_f(L, (1,))) == 2
    assert len(explicit_f(L, [(1,), (2,)])) == 3
    assert explicit_f(L, []) == frozenset()
    with pytest.raises(FormatError):
        explicit_f(L, [(1,), (1, 2)])


def test_explicit_f_injective_depth_2():
    L = build_levels([2, 2], 2)
    pre = L.prefixes[1]
    images = set()
    for r in range(len(pre) + 1):
        for A in itertools.combinations(pre, r):
            images.add(explicit_f(L, list(A)))
    assert len(images) == 2 ** len(pre)


def test_explicit_f_preserves_unions():
    L = build_levels([2, 2], 2)
    pre = L.prefixes[1]
    for A in itertools.combinations(pre, 2):
        for B in itertools.combinations(pre, 2):
            assert explicit_f(L, list(A) + list(B)) == explicit_f(L, list(A)) | explicit_f(L, list(B))


def _brute_generators(L, f):
    n = len(f)
    sets = [L.level_sets(i + 1)[L.levels[i].index(f[i])] for i in range(n)]
    return frozenset(t for t in L.prefixes[n - 1] if all(t[: i + 1] in sets[i] for i in range(n)))


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_generator_lemma_exhaustive(depth):
    L = build_levels([2] * depth, depth)
    for n in range(1, depth + 1):
        seen = set()
        for f in L.points(n):
            gens = generators_of(L, f)
            assert gens and gens == _brute_generators(L, f)
            assert f in explicit_f(L, list(gens))
            seen.add(gens)
        pre = L.prefixes[n - 1]
        nonempty = [frozenset(A) for r in range(1, len(pre) + 1) for A in itertools.combinations(pre, r)]
        assert seen == set(nonempty)
        for A in nonempty:
            assert generators_of(L, f_generated_by(L, A)) == A


def test_generator_examples():
    L = build_levels([2, 2], 2)
    full = tuple(T[-1] for T in L.levels)
    assert generators_of(L, full) == frozenset(L.prefixes[1])
    assert f_generated_by(L, [(1,)]) == (1,)
    assert generators_of(L, (0b01,)) == frozenset({(1,)})
    with pytest.raises(PreconditionError):
        f_generated_by(L, [])
    with pytest.raises(FormatError):
        generators_of(L, (0,))


@pytest.mark.parametrize("n", [1, 2])
def test_explicit_images_are_star_free(n):
    L = build_levels([2, 2], 2)
    fm = explicit_f_map(L, n)
    assert star_free_check(fm.target.one, list(fm.atom_images)).passed


# pullbacks


def test_pullback_identity():
    alg = FiniteAlgebra(3)
    lam = SignedMeasure((F(1, 2), F(1, 3), F(1, 6)))
    mu = pullback_submeasure(lam, lambda a: a, alg)
    assert list(mu.values) == [lam(a) for a in alg.elements()]


def test_pullback_good_map_uniform():
    lam = SignedMeasure((F(1, 3),) * 3)
    mu = pullback_submeasure(lam, GoodMap.canonical(2), FiniteAlgebra(2))
    assert list(mu.values) == [0, F(2, 3), F(2, 3), 1]


def test_pullback_explicit_depth_1():
    L = build_levels([2], 1)
    fm = explicit_f_map(L, 1)
    mu = pullback_submeasure(SignedMeasure((F(1, 3),) * 3), fm, fm.source)
    assert list(mu.values) == [0, F(2, 3), F(2, 3), 1]
    assert mu(0b01) + mu(0b10) != mu(0b11)


def test_pullback_errors():
    alg = FiniteAlgebra(2)
    with pytest.raises(PreconditionError):
        pullback_submeasure(SignedMeasure((F(-1), F(1))), lambda a: a, alg)
    with pytest.raises(PreconditionError):
        pullback_submeasure(SignedMeasure((F(1), F(1))), lambda a: a | 1, alg)
    with pytest.raises(PreconditionError):
        pullback_submeasure(SignedMeasure((F(1), F(1), F(1))), lambda a: 0b111 if a == 3 else a, alg)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.lists(st.fractions(0, 5, max_denominator=7), min_size=(1 << n) - 1, max_size=(1 << n) - 1)))
def test_pullback_is_submeasure(atoms):
    n = (len(atoms) + 1).bit_length() - 1
    mu = pullback_submeasure(SignedMeasure(tuple(atoms)), GoodMap.canonical(n), FiniteAlgebra(n))
    assert isinstance(mu, Submeasure)


def test_pullback_explicit_depth_2_is_submeasure():
    L = build_levels([2, 2], 2)
    fm = explicit_f_map(L, 2)
    rng = random.Random(8)
    for _ in range(10):
        lam = SignedMeasure(tuple(F(rng.randint(0, 5), 7) for _ in range(fm.target.n_atoms)))
        assert isinstance(pullback_submeasure(lam, fm, fm.source), Submeasure)
