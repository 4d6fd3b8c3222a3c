import random
from fractions import Fraction as F

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from maharam.errors import FormatError, PreconditionError
from maharam.linalg import bareiss_det, mat_vec, solve


def test_det_examples():
    assert bareiss_det([]) == 1
    assert bareiss_det([[5]]) == 5
    assert bareiss_det([[0, 1], [1, 0]]) == -1
    assert bareiss_det([[1, 2], [2, 4]]) == 0
    assert bareiss_det([[F(1, 2), 0], [0, F(2, 3)]]) == F(1, 3)
    assert bareiss_det([[0, 0, 1], [0, 1, 0], [1, 0, 0]]) == -1


def test_solve_examples():
    assert solve([[2, 1], [1, 3]], [3, 5]) == [F(4, 5), F(7, 5)]
    assert solve([[0, 1], [1, 0]], [F(1, 2), 3]) == [3, F(1, 2)]
    with pytest.raises(PreconditionError):
        solve([[1, 2], [2, 4]], [1, 2])
    with pytest.raises(FormatError):
        solve([[1, 2]], [1])
    with pytest.raises(FormatError):
        solve([[1]], [1, 2])


matrices = st.integers(1, 6).flatmap(
    lambda n: st.lists(
        st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=6), min_size=n, max_size=n),
        min_size=n, max_size=n,
    )
)


@settings(max_examples=150, deadline=None)
@given(matrices)
def test_det_matches_sympy(M):
    ref = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in M]).det()
    assert bareiss_det(M) == F(int(ref.p), int(ref.q))


@settings(max_examples=150, deadline=None)
@given(matrices, st.data())
def test_solve_satisfies_system(M, data):
    n = len(M)
    b = data.draw(st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=6), min_size=n, max_size=n))
    if bareiss_det(M) == 0:
        with pytest.raises(PreconditionError):
            solve(M, b)
    else:
        assert mat_vec(M, solve(M, b)) == b


def test_sparse_zero_pivot_rows():
    # zero entries below the pivot must still be eliminated consistently
    rng = random.Random(0)
    for _ in range(200):
        n = rng.randint(2, 7)
        M = [[rng.choice([0, 0, 0, 1, -1, 2]) for _ in range(n)] for _ in range(n)]
        b = [rng.randint(-3, 3) for _ in range(n)]
        if bareiss_det(M) != 0:
            assert mat_vec(M, solve(M, b)) == b
