import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyc.carleson import largest_feasible_eta, sparse_witness
from dyc.errors import DomainError, WeightConstraintError
from dyc.forest import CubeFamily
from dyc.generators import nonneg_function, positive_weight, random_family
from dyc.grid import GridFunction
from dyc.lattice import TruncatedLattice
from dyc.weighted import (
    INF,
    ExponentProfile,
    conjugate,
    constrained_weights,
    dyadic_maximal,
    main_theorem_constant,
    muckenhoupt_norm,
    renormalization_forms,
    renormalize,
    verify_kbound,
    verify_main_theorem,
    verify_maximal_theorem,
)

from conftest import C, fam

TOP = C("0:1")
U4 = TruncatedLattice(TOP, 4)


def _oracle_maximal(f, w, F):
    # per cell, scan every family cube holding it
    out = np.zeros(f.values.shape)
    for idx in np.ndindex(f.values.shape):
        cell = f.cell_cube(idx)
        best = 0.0
        for Q in F:
            if Q.contains(cell):
                best = max(best, (f.abs() * w).integral(Q) / w.integral(Q))
        out[idx] = best
    return out


def test_conjugate():
    assert conjugate(2) == 2
    assert conjugate(Fraction(3, 2)) == 3
    assert conjugate("inf") == 1
    assert conjugate(1) == INF


def test_profile_closed_forms():
    P = ExponentProfile([2, 2], [1, 1])
    assert P.q_i == (Fraction(1, 2), Fraction(1, 2))
    assert P.q == 1 and P.gamma == 2 and P.tau == 1
    assert P.gamma_raw == P.gamma
    with pytest.raises(DomainError):
        ExponentProfile([2, 2], [1, 2])
    with pytest.raises(DomainError):
        ExponentProfile([1, INF], [1, 1])
    Q = ExponentProfile.from_json(ExponentProfile([4, 4, 2], [1, 1, 1]).to_json())
    assert Q.p == (4, 4, 2)


@given(st.lists(st.integers(2, 12), min_size=2, max_size=3), st.data())
@settings(max_examples=100)
def test_gamma_identity(den, data):
    # r_i/p_i = 1/den_i scaled to sum 1; p_i drawn from a small set
    ps = [data.draw(st.sampled_from([Fraction(3, 2), Fraction(2), Fraction(3), Fraction(4), Fraction(5, 2)])) for _ in den]
    wts = [Fraction(1, d) for d in den]
    tot = sum(wts)
    rs = [pi * w / tot for pi, w in zip(ps, wts)]
    P = ExponentProfile(ps, rs)
    assert P.gamma_raw == P.gamma
    assert P.tau == P.q * max(1 / (p - 1) for p in ps)


def test_maximal_examples():
    one = GridFunction.constant(TOP, 3, 1.0)
    w = GridFunction(TOP, 3, np.arange(1, 9, dtype=float))
    F = CubeFamily(TruncatedLattice(TOP, 2).cubes())
    assert np.allclose(dyadic_maximal(one * 3.0, w, F).values, 3.0)
    ind = GridFunction(TOP, 1, [1.0, 0.0])
    F1 = CubeFamily(TruncatedLattice(TOP, 1).cubes())
    assert list(dyadic_maximal(ind, GridFunction.constant(TOP, 1, 1.0), F1).values) == [1.0, 0.5]
    assert not dyadic_maximal(ind, ind + 1.0, CubeFamily([])).values.any()
    rep = verify_maximal_theorem(ind, GridFunction.constant(TOP, 1, 1.0), F1, 2)
    assert rep["passed"] and rep["numeric"]["lp_lhs"] <= 2 * ind.lp_norm(2)
    rep = verify_maximal_theorem(one, w, F, "inf")
    assert rep["passed"] and rep["numeric"]["lp_lhs"] == pytest.approx(rep["numeric"]["lp_rhs"])


@given(st.integers(0, 10 ** 6), st.sampled_from([Fraction(3, 2), 2, 4, "inf"]))
@settings(max_examples=60, deadline=None)
def test_maximal_property(seed, p):
    rng = np.random.default_rng(seed)
    F = random_family(rng, U4)
    f = nonneg_function(rng, TOP, 4)
    w = positive_weight(rng, TOP, 4)
    assert np.allclose(dyadic_maximal(f, w, F).values, _oracle_maximal(f, w, F), rtol=1e-12)
    rep = verify_maximal_theorem(f, w, F, p)
    assert rep["passed"], rep["counterexample"]
    assert Fraction(rep["exact"]["weak_constant"]) <= 1


def test_muckenhoupt_examples(rng):
    one = GridFunction.constant(TOP, 2, 1.0)
    assert muckenhoupt_norm([one, one], [Fraction(1, 2), Fraction(1, 2)], U4) == pytest.approx(1.0)
    w = GridFunction(TOP, 1, [1.0, 3.0])
    assert muckenhoupt_norm([w], [1], TruncatedLattice(TOP, 1)) == pytest.approx(3.0)
    a = positive_weight(rng, TOP, 4)
    b = positive_weight(rng, TOP, 4)
    qs = [Fraction(1, 3), Fraction(2, 3)]
    base = muckenhoupt_norm([a, b], qs, U4)
    assert muckenhoupt_norm([a * 5.0, b], qs, U4) == pytest.approx(5.0 ** (1 / 3) * base, rel=1e-12)


def test_kbound_trivial():
    one = GridFunction.constant(TOP, 2, 1.0)
    S = fam("0:1")
    W = sparse_witness(S, 1)
    P = ExponentProfile([2, 2], [1, 1])
    rep = verify_kbound(S, W, P, [one, one], [one, one])
    assert rep["numeric"]["lhs"] == pytest.approx(1.0)
    assert rep["numeric"]["rhs"] >= 1.0 and rep["passed"]


def test_kbound_constraint_enforced(rng):
    S = fam("0:1")
    W = sparse_witness(S, 1)
    P = ExponentProfile([2, 2], [1, 1])
    a = positive_weight(rng, TOP, 3)
    with pytest.raises(WeightConstraintError):
        verify_kbound(S, W, P, [a, a], [a, a])


PROFILES = [([2, 2], [1, 1]), ([4, 4, 2], [1, 1, 1]), ([3, Fraction(3, 2)], [1, 1]), ([4, "inf"], [4, Fraction(3, 4)])]


@given(st.integers(0, 10 ** 6), st.sampled_from(PROFILES))
@settings(max_examples=60, deadline=None)
def test_kbound_property(seed, prof):
    rng = np.random.default_rng(seed)
    P = ExponentProfile(*prof)
    S = random_family(rng, U4)
    W = sparse_witness(S, largest_feasible_eta(S))
    ws = constrained_weights([positive_weight(rng, TOP, 4) for _ in range(P.m - 1)], P.q_i)
    fs = [nonneg_function(rng, TOP, 4) for _ in range(P.m)]
    rep = verify_kbound(S, W, P, ws, fs)
    assert rep["passed"], rep["counterexample"]
    assert rep["prodi_ok"]
    # both sides are homogeneous of degree r_1 in f_1
    rep2 = verify_kbound(S, W, P, ws, [fs[0] * 3.0] + fs[1:])
    r1 = float(P.r[0])
    assert rep2["numeric"]["lhs"] == pytest.approx(3.0 ** r1 * rep["numeric"]["lhs"], rel=1e-9)
    assert rep2["numeric"]["rhs"] == pytest.approx(3.0 ** r1 * rep["numeric"]["rhs"], rel=1e-9)


def test_renormalize_examples(rng):
    one = GridFunction.constant(TOP, 3, 1.0)
    assert np.allclose(renormalize(one, 3).values, 1.0)
    v = positive_weight(rng, TOP, 4)
    assert np.allclose(renormalize(v, 2).values, 1.0 / v.values)
    w = renormalize(v, Fraction(5, 2))
    assert float(np.abs(w.values - w.values ** 2.5 * v.values).max()) < 1e-9 * float(w.values.max())
    with pytest.raises(DomainError):
        renormalize(v, 1)


@given(st.integers(0, 10 ** 6), st.sampled_from([Fraction(3, 2), 2, 3]))
@settings(max_examples=40, deadline=None)
def test_renormalization_forms_agree(seed, p):
    rng = np.random.default_rng(seed)
    S = random_family(rng, U4)
    f, g = nonneg_function(rng, TOP, 4), nonneg_function(rng, TOP, 4)
    v = positive_weight(rng, TOP, 4)
    out = renormalization_forms(S, f, g, v, p)
    (s1, n1), (s2, n2) = out["one_weight"], out["two_weight"]
    assert s1 == pytest.approx(s2, rel=1e-9)
    assert n1 == pytest.approx(n2, rel=1e-9)


def test_main_constant_branches():
    a = main_theorem_constant([4, 4], 1)
    assert a["branch"] == "p>1" and a["p"] == 2 and a["exponent"] == 2
    b = main_theorem_constant([2, 2], 1)
    assert b["branch"] == "p<=1" and b["p"] == 1 and b["exponent"] == 2
    assert b["profile"].p[-1] == INF


@pytest.mark.parametrize("p", [Fraction(5, 4), Fraction(3, 2), 2, 3, 7])
def test_single_weight_exponent(p):
    info = main_theorem_constant([p], Fraction(1, 2))
    p = Fraction(p)
    assert info["exponent"] / info["p"] == max(1 / (p - 1), 1)


def test_main_small_example():
    S = fam("0:1")
    W = sparse_witness(S, 1)
    one = GridFunction.constant(TOP, 1, 1.0)
    ind = GridFunction(TOP, 1, [1.0, 0.0])
    rep = verify_main_theorem(S, W, [one], [2], [ind])
    # A f = 1/2 on [0,1): lhs 1/2; C = 2 * 2, [w] = 1, ||f||_2 = 2^-1/2
    assert rep["numeric"]["lhs"] == pytest.approx(0.5)
    assert rep["numeric"]["rhs"] == pytest.approx(4 / math.sqrt(2))
    assert rep["passed"]


@given(st.integers(0, 10 ** 6), st.sampled_from([[4, 4], [2, 2], [3, Fraction(3, 2)], [Fraction(3, 2), 2, 4]]))
@settings(max_examples=40, deadline=None)
def test_main_property(seed, ps):
    rng = np.random.default_rng(seed)
    S = random_family(rng, U4)
    W = sparse_witness(S, largest_feasible_eta(S))
    vs = [positive_weight(rng, TOP, 4) for _ in ps]
    fs = [nonneg_function(rng, TOP, 4) for _ in ps]
    rep = verify_main_theorem(S, W, vs, ps, fs)
    assert rep["passed"], rep["counterexample"]
    assert rep["numeric"]["constraint_error"] < 1e-9
