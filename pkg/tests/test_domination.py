import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyc.carleson import carleson_constant
from dyc.cube import Cube
from dyc.domination import (
    DecaySequence,
    DiscreteKernel,
    apply_kernel,
    averaging_augment,
    check_oscillation_bound,
    dominate,
    estimate_weak_type,
    make_kernel,
    sparse_operator,
    summation_trick_check,
)
from dyc.errors import AlignmentError, DomainError, RegularityError
from dyc.forest import CubeFamily
from dyc.generators import random_family
from dyc.grid import GridFunction, generate
from dyc.lattice import CANONICAL, TruncatedLattice
from dyc.shifted import LatticeDescriptor, all_labels

from conftest import C, fam

TOP = C("0:1")


def _brute_T(kernel, fs):
    # plain loops over cell centres
    N = fs[0].n_per_axis
    h = 1.0 / N
    c = [(i + 0.5) * h for i in range(N)]
    out = []
    for x in c:
        s = 0.0
        if len(fs) == 1:
            for j, y in enumerate(c):
                if y != x:
                    s += kernel(x, y) * fs[0].values[j] * h
        else:
            for j, y1 in enumerate(c):
                for k, y2 in enumerate(c):
                    if y1 == x and y2 == x:
                        continue
                    s += kernel(x, y1, y2) * fs[0].values[j] * fs[1].values[k] * h * h
        out.append(s)
    return np.array(out)


def test_zero_input():
    for name in ("hilbert", "maxpow"):
        for m in (1, 2):
            K = make_kernel(name, m)
            fs = [GridFunction.constant(TOP, 4, 1.0)] * (m - 1) + [GridFunction.constant(TOP, 4, 0.0)]
            assert not apply_kernel(K, *fs).values.any()


def test_hilbert_against_loops():
    f = GridFunction(TOP, 4, [0.0] * 8 + [1.0] * 8)
    got = apply_kernel(make_kernel("hilbert", 1), f).values
    exp = _brute_T(lambda x, y: 1.0 / (x - y), [f])
    assert np.allclose(got, exp, rtol=1e-12, atol=1e-12)


def test_maxpow_against_loops(rng):
    f1 = generate("indicator", TOP, 3, rng)
    f2 = generate("indicator", TOP, 3, rng)
    got = apply_kernel(make_kernel("maxpow", 2), f1, f2).values
    exp = _brute_T(lambda x, a, b: 1.0 / max(abs(x - a), abs(x - b)) ** 2, [f1, f2])
    assert np.allclose(got, exp, rtol=1e-12)
    got = apply_kernel(make_kernel("hilbert", 2), f1, f2).values
    exp = _brute_T(lambda x, a, b: ((x - a) + (x - b)) / (abs(x - a) + abs(x - b)) ** 3, [f1, f2])
    assert np.allclose(got, exp, rtol=1e-12, atol=1e-12)


def test_kernel_errors():
    with pytest.raises(DomainError):
        make_kernel("nope", 1)
    with pytest.raises(DomainError):
        make_kernel("hilbert", 3)
    f = GridFunction.constant(TOP, 3, 1.0)
    g = GridFunction.constant(TOP, 4, 1.0)
    with pytest.raises(DomainError):
        apply_kernel(make_kernel("maxpow", 2), f, g)


def test_size_condition():
    c = (np.arange(32) + 0.5) / 32
    for name in ("hilbert", "maxpow"):
        for m in (1, 2):
            assert make_kernel(name, m).check_size(c)["passed"]


def test_dini_integral():
    # t = exp(-u) turns the integral into the smooth  ∫ u exp(-δu) du
    for delta in (0.25, 0.5, 1.0):
        K = make_kernel("hilbert", 1, delta=delta)
        u = np.linspace(0, 400, 800001)
        y = u * np.exp(-delta * u)
        q = float(((y[1:] + y[:-1]) / 2 * np.diff(u)).sum())
        assert K.dini_log_integral() == pytest.approx(q, rel=1e-6)


def test_weak_type_estimates():
    zero = DiscreteKernel("zero", 1, rule=lambda x, y: 0.0 * x * y[0])
    assert estimate_weak_type(zero, 5, seed=0, depth=5)["C_W"] == 0
    K = make_kernel("hilbert", 1)
    a = estimate_weak_type(K, 30, seed=1, depth=6)
    b = estimate_weak_type(K.scaled(2.0), 30, seed=1, depth=6)
    assert 0 < a["C_W"] < math.inf
    assert b["C_W"] == pytest.approx(2.0 * a["C_W"], rel=1e-9)
    h = a["history"]
    assert all(x <= y for x, y in zip(h, h[1:]))
    c = estimate_weak_type(K, 30, seed=2, depth=6)
    assert abs(c["C_W"] - a["C_W"]) / a["C_W"] < 0.2


def test_oscillation_bound_report():
    K = make_kernel("hilbert", 1)
    zero = GridFunction.constant(C("-2:4"), 6, 0.0)
    r = check_oscillation_bound(K, [zero], C("0:1"), Fraction(1, 8), C_fit=1.0)
    assert r["lhs"] == 0 and r["passed"]
    f = GridFunction.from_function(C("-2:4"), 6, lambda x: 1.0 if x[0] > 1.5 else 0.0)
    r = check_oscillation_bound(K, [f], C("-2:1/2"), Fraction(1, 8))
    assert 0 <= r["ratio"] < math.inf and r["rhs_without_C"] > 0


def test_sparse_operator_examples():
    one = GridFunction.constant(TOP, 2, 1.0)
    assert np.allclose(sparse_operator(fam("0:1"), 1, [one]).values, 1.0)
    ind = GridFunction(TOP, 1, [1.0, 0.0])
    out = sparse_operator(fam("0:1", "0:1/2"), 1, [ind])
    assert list(out.values) == [1.5, 0.5]
    assert np.array_equal(sparse_operator(fam("0:1", "0:1/2"), 1, [ind], p=1.0).values, out.values)
    with pytest.raises(AlignmentError):
        sparse_operator(CubeFamily([Cube((Fraction(1, 8),), Fraction(1, 8))]), 1, [ind])


@given(st.integers(0, 10 ** 6), st.floats(0.2, 1.0))
@settings(max_examples=40, deadline=None)
def test_sparse_operator_properties(seed, p):
    rng = np.random.default_rng(seed)
    U = TruncatedLattice(TOP, 4)
    S = random_family(rng, U)
    f = generate("indicator", TOP, 4, rng)
    g = generate("spike", TOP, 4, rng)
    A = sparse_operator(S, 2, [f, g]).values
    # linearity in the first slot
    A2 = sparse_operator(S, 2, [f + f, g]).values
    assert np.allclose(A2, 2 * A)
    # monotone in S
    big = S.union(CubeFamily([TOP]))
    assert (sparse_operator(big, 2, [f, g]).values >= A - 1e-12).all()
    # A^p <= A_p for p <= 1
    Ap = sparse_operator(S, 2, [f, g], p=p).values
    assert (A ** p <= Ap * (1 + 1e-12) + 1e-15).all()


def test_decay_sequence():
    a = DecaySequence.geometric(Fraction(1, 2), 40)
    L = 40
    assert a.beta == 4 - Fraction(L + 2, 2 ** (L - 1))
    assert a(0) == 1 and a(41) == 0
    with pytest.raises(DomainError):
        DecaySequence([1, -1])


def test_summation_examples():
    U = TruncatedLattice(TOP, 3)
    a = DecaySequence.geometric(Fraction(1, 2), 4)
    assert summation_trick_check(fam("0:1"), U, a, lambda R: 0.0)["passed"]
    assert summation_trick_check(fam("0:1"), U, a, lambda R: float(R.side))["passed"]
    with pytest.raises(RegularityError):
        summation_trick_check(fam("0:1/2"), U, a, lambda R: 1.0)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_summation_property(seed):
    rng = np.random.default_rng(seed)
    U = TruncatedLattice(C("-2:4"), 4)
    S = random_family(rng, U).union(CubeFamily([U.top]))
    a = DecaySequence.geometric(Fraction(1, 2), 5) if seed % 2 else DecaySequence([Fraction(int(x), 8) for x in rng.integers(0, 9, size=5)])
    vals = {R: float(rng.exponential()) for R in U.cubes()}
    rep = summation_trick_check(S, U, a, vals)
    assert rep["passed"], rep["counterexample"]


def test_averaging_augment_examples(rng):
    U = TruncatedLattice(TOP, 5)
    S = fam("0:1")
    one = GridFunction.constant(TOP, 5, 1.0)
    out, rep = averaging_augment(S, [one], U)
    assert out == S and rep["passed"]
    v = np.zeros(32)
    v[13] = 1.0
    spike = GridFunction(TOP, 5, v)
    out, rep = averaging_augment(S, [spike], U)
    assert rep["passed"]
    cell = Cube((Fraction(13, 32),), Fraction(1, 32))
    assert all(Q.contains(cell) for Q in out)
    assert len(out) > 1


@given(st.integers(0, 10 ** 6), st.sampled_from([1, 2]))
@settings(max_examples=30, deadline=None)
def test_averaging_augment_constant(seed, m):
    rng = np.random.default_rng(seed)
    U = TruncatedLattice(TOP, 5)
    S = random_family(rng, U).union(CubeFamily([TOP]))
    fs = [generate("indicator", TOP, 5, rng).abs() for _ in range(m)]
    out, rep = averaging_augment(S, fs, U)
    assert rep["passed"]
    lam0 = carleson_constant(S)
    # the averaging stopping families are 2-Carleson
    assert carleson_constant(out) <= 2 * (lam0 + 1)


@given(st.integers(0, 10 ** 6))
@settings(max_examples=30, deadline=None)
def test_triple_lift_factor(seed):
    rng = np.random.default_rng(seed)
    U = TruncatedLattice(C("-2:4"), 5)
    S = random_family(rng, U)
    base = LatticeDescriptor((), 1)
    for j in all_labels(1):
        lifted = CubeFamily({base.containing_triple(Q, j) for Q in S}, base.extend(j), validate=False)
        assert carleson_constant(lifted) <= 3 * carleson_constant(S)


def test_dominate_zero():
    K = make_kernel("hilbert", 1)
    rep = dominate(K, [GridFunction.constant(TOP, 5, 0.0)], Fraction(1, 8))
    assert rep["c_fit"] == 0 and rep["passed"]


@pytest.mark.parametrize("name,m", [("hilbert", 1), ("hilbert", 2), ("maxpow", 1), ("maxpow", 2)])
def test_dominate_indicator(name, m):
    rng = np.random.default_rng(5)
    fs = [generate("indicator", TOP, 5, rng) for _ in range(m)]
    rep = dominate(make_kernel(name, m), fs, Fraction(1, 8))
    assert rep["passed"]
    assert rep["family_bounds"] == ["6", "18", "42"]
    consts = [Fraction(x) for x in rep["family_constants"]]
    assert consts[0] <= 6 and consts[1] <= 18 and consts[2] <= 42
    assert 0 < rep["c_fit"] < math.inf
