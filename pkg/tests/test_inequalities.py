from fractions import Fraction as F

import mpmath
import pytest
from hypothesis import example, given, settings
from hypothesis import strategies as st

from maharam.errors import RangeError
from maharam.inequalities import (
    all_pass,
    check_instance,
    grid,
    instance_sides,
    int_repr,
    iter_instances,
    verify_inequalities,
)
from maharam.weights import Schedule
from conftest import BROKEN, TOY_SCHEDULES, UNBALANCED


def log2_lw(s: Schedule, k: int, n: int):
    """Independent high-precision log2 of 2^-k (eta(k)/n)^alpha(k)."""
    a = s.alpha(k)
    a = mpmath.mpf(a.numerator) / a.denominator
    lg = s.eta_log2(k)
    eta = mpmath.mpf(lg.numerator) / lg.denominator if lg is not None else mpmath.log(s.eta(k), 2)
    return -k + a * (eta - mpmath.log(n, 2))


def oracle_sides(s: Schedule, name: str, **p):
    with mpmath.workdps(80):
        if name == "ineq1":
            return log2_lw(s, p["k"], p["n"]), log2_lw(s, p["k"] + 1, p["n"])
        if name == "ineq6":
            return log2_lw(s, p["delta1"], p["k"]), mpmath.mpf(-p["delta2"])
        if name == "ineq4":
            N, M = p["N"], p["M"]
            return (log2_lw(s, p["delta1"], N - 1) + mpmath.log(N, 2),
                    log2_lw(s, p["delta2"], M - 1) + mpmath.log(M, 2))
        k, N = p["k"], p["N"]
        return log2_lw(s, p["delta1"], k), log2_lw(s, p["delta2"], N + k - 1) + mpmath.log(N, 2)


def test_talagrand_ineq1_endpoints(talagrand):
    for n in (1, 2, 2**2500):
        assert check_instance(talagrand, "ineq1", k=1, n=n) == (True, "less")


def test_talagrand_ineq4_small_instances(talagrand):
    # 2 w(1) < N w(N-1) for N in [3, 64]
    for N in range(3, 65):
        ok, order = check_instance(talagrand, "ineq4", delta1=1, delta2=1, N=2, M=N)
        assert ok and order == "less"


def test_toy_equality_instance():
    s = Schedule.table([2, 4], [1, F(1, 2)])
    assert check_instance(s, "ineq4", delta1=1, delta2=1, N=2, M=2) == (True, "equal")


def test_broken_schedule_fails_ineq1():
    rep = verify_inequalities(BROKEN, which=("ineq1",))
    assert not rep["ineq1"].passed
    f = rep["ineq1"].failures[0]
    assert (f["k"], f["n"]) == (1, 1)
    assert f["order"] == "greater"
    assert check_instance(BROKEN, "ineq1", k=1, n=1) == (False, "greater")


def test_unbalanced_fails_ineq4():
    rep = verify_inequalities(UNBALANCED, dense=True)
    assert not rep["ineq4"].passed
    # lw(1, 1) = lw(2, 1) = 1, so the strict ineq1 fails by equality
    assert check_instance(UNBALANCED, "ineq1", k=1, n=1) == (False, "equal")
    assert check_instance(UNBALANCED, "ineq4", delta1=1, delta2=1, N=2, M=3) == (False, "greater")
    assert ("ineq4", rep["ineq4"].failures[0]) in list(iter_instances(rep))


@pytest.mark.parametrize("name", sorted(TOY_SCHEDULES))
def test_toy_schedules_pass(name):
    s = TOY_SCHEDULES[name]
    # eta(2) = 4096 would mean millions of dense ineq4 instances
    assert all_pass(verify_inequalities(s, dense=s.eta(s.k_max) <= 64))


def test_talagrand_quick(talagrand):
    reps = verify_inequalities(talagrand, k_range=range(1, 4), samples=4)
    assert all_pass(reps)
    assert all(r.checked > 0 for r in reps.values())


@pytest.mark.parametrize("name,params", [
    ("ineq1", {"k": 1, "n": 3}),
    ("ineq6", {"delta1": 1, "delta2": 2, "k": 2}),
    ("ineq4", {"delta1": 1, "delta2": 2, "N": 3, "M": 7}),
    ("ineq5", {"delta1": 1, "delta2": 2, "k": 2, "N": 5}),
])
@pytest.mark.parametrize("sched", sorted(TOY_SCHEDULES) + ["unbalanced", "broken"])
def test_instances_match_oracle(sched, name, params):
    s = {"unbalanced": UNBALANCED, "broken": BROKEN}.get(sched) or TOY_SCHEDULES[sched]
    lo, hi = oracle_sides(s, name, **params)
    _, rel, _ = instance_sides(s, name, **params)
    ok, order = check_instance(s, name, **params)
    if abs(lo - hi) < mpmath.mpf(2) ** -200:
        assert order == "equal"
    else:
        assert order == ("less" if lo < hi else "greater")
    expect = {"<": lo < hi, "<=": lo <= hi or order == "equal", ">=": lo >= hi or order == "equal"}[rel]
    assert ok == expect


def test_instance_errors(talagrand):
    with pytest.raises(RangeError):
        instance_sides(talagrand, "ineq9", k=1)
    with pytest.raises(RangeError):
        instance_sides(talagrand, "ineq1", n=1)
    with pytest.raises(RangeError):
        verify_inequalities(talagrand, k_range=[7])
    with pytest.raises(RangeError):
        verify_inequalities(talagrand, which=("ineq2",))


def test_grid():
    assert grid(1, 10) == list(range(1, 11))
    assert grid(5, 4) == []
    g = grid(1, 2**40, samples=16)
    assert g[0] == 1 and g[-1] == 2**40
    assert all(v & (v - 1) == 0 for v in g)
    assert g == sorted(set(g)) and len(g) <= 18
    assert grid(1, 1000, dense=True) == list(range(1, 1001))
    g = grid(3, 10**6, samples=4)
    assert g[0] == 3 and g[-1] == 10**6 and len(g) <= 6


def test_ineq4_dip_is_found():
    # (x + 1) x^(-3/5) dips below its value at 1 near x = 2, between grid samples
    s = Schedule.table([129], [F(3, 5)])
    assert check_instance(s, "ineq4", delta1=1, delta2=1, N=2, M=3) == (False, "greater")
    rep = verify_inequalities(s, samples=2, which=("ineq4",))["ineq4"]
    assert not rep.passed


def test_int_repr():
    assert int_repr(5) == 5
    assert int_repr(2**100) == "2^100"
    assert int_repr(2**100 + 7) == "2^100+7"
    assert int_repr(2**100 - 3) == "2^100-3"
    assert int_repr(3**100) == f"~2^{(3**100).bit_length()}"


def test_report_json_round_shape():
    rep = verify_inequalities(BROKEN, which=("ineq1",), max_failures=1)["ineq1"]
    js = rep.to_json()
    assert js["passed"] is False and len(js["failures"]) == 1
    assert js["failures"][0]["lhs"]["kind"] in ("pow2", "interval", "rational")


@st.composite
def small_schedules(draw):
    # the top range must exceed the dense limit for the grid to sample
    top = draw(st.integers(65, 130))
    eta = [draw(st.integers(1, top - 1)), top] if draw(st.booleans()) else [top]
    alpha = [F(1, draw(st.integers(1, 6))) for _ in eta]
    return Schedule.table(eta, alpha)


@settings(max_examples=20, deadline=None)
@given(small_schedules())
@example(Schedule.table([129], [F(3, 5)]))
def test_grid_agrees_with_dense(s):
    g = verify_inequalities(s, samples=2)
    d = verify_inequalities(s, dense=True)
    for name in g:
        assert g[name].passed == d[name].passed, name
