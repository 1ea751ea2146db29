from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyc.carleson import (
    SparseWitness,
    carleson_constant,
    detect_stack,
    frame_cube,
    largest_feasible_eta,
    morton_range,
    sparse_witness,
    split_family,
    verify_witness,
)
from dyc.cube import Cube
from dyc.errors import EmptyFamily, EtaTooLarge, RefinementTooDeep
from dyc.forest import CubeFamily
from dyc.generators import random_family
from dyc.lattice import CANONICAL, TruncatedLattice
from dyc.stopping import augment

from conftest import C, fam


def _chain(k):
    return CubeFamily([Cube((0,), Fraction(1, 2 ** j)) for j in range(k + 1)])


def _full(k, dim=1):
    return CubeFamily(TruncatedLattice(CANONICAL.cube_at((Fraction(0),) * dim, 0), k).cubes())


def _oracle_lambda(S):
    return max(sum((Fraction(P.volume) for P in S if Q.contains(P)), Fraction(0)) / Fraction(Q.volume) for Q in S)


def test_constant_examples():
    assert carleson_constant(fam("0:1")) == 1
    for k in range(5):
        assert carleson_constant(_full(k)) == k + 1
        assert carleson_constant(_chain(k)) == 2 - Fraction(1, 2 ** k)
    assert carleson_constant(_chain(4)) == Fraction(31, 16)
    with pytest.raises(EmptyFamily):
        carleson_constant(CubeFamily([]))


@given(st.integers(0, 10 ** 6), st.sampled_from([(1, 5), (2, 3)]))
@settings(max_examples=50, deadline=None)
def test_constant_matches_oracle(seed, shape):
    n, d = shape
    U = TruncatedLattice(CANONICAL.cube_at((Fraction(0),) * n, 0), d)
    S = random_family(np.random.default_rng(seed), U, max_cubes=80)
    assert carleson_constant(S) == _oracle_lambda(S)


def test_witness_worked_example():
    S = fam("0:1", "0:1/2")
    assert carleson_constant(S) == Fraction(3, 2)
    with pytest.raises(RefinementTooDeep):
        sparse_witness(S, Fraction(2, 3), cap=3)
    W = sparse_witness(S, Fraction(2, 3), cap=3, round_down=True)
    assert W.eta == Fraction(5, 8)
    assert W.resolution == 4
    assert W.measure(C("0:1/2")) == Fraction(5, 16)
    assert W.measure(C("0:1")) == Fraction(5, 8)
    # the smaller cube takes the cells nearest its corner
    assert W.cubes(C("0:1/2"))[0] == C("0:1/4")
    assert verify_witness(S, W)["passed"]


def test_witness_trivial():
    W = sparse_witness(fam("0:1"), 1)
    assert W.measure(C("0:1")) == 1
    S = fam("0:1/2", "1/2:1/2")
    W = sparse_witness(S, 1)
    assert W.cubes(C("0:1/2")) == [C("0:1/2")]
    assert W.cubes(C("1/2:1/2")) == [C("1/2:1/2")]


def test_eta_too_large():
    with pytest.raises(EtaTooLarge):
        sparse_witness(fam("0:1", "0:1/2"), Fraction(3, 4))


def test_witness_negative_controls():
    S = fam("0:1", "0:1/2")
    W = sparse_witness(S, Fraction(1, 2))
    assert verify_witness(S, W)["passed"]
    sets = dict(W.sets)
    sets[C("0:1")] = list(sets[C("0:1/2")])
    over = SparseWitness(W.eta, W.frame, W.resolution, sets)
    rep = verify_witness(S, over)
    assert rep["counterexample"]["code"] in ("DISJOINTNESS", "MEASURE")
    sets = dict(W.sets)
    s, e = sets[C("0:1")][0]
    sets[C("0:1")] = [(s, s + 1)]
    rep = verify_witness(S, SparseWitness(W.eta, W.frame, W.resolution, sets))
    assert rep["counterexample"]["code"] == "MEASURE"
    lo, hi = morton_range(W.frame, C("0:1/2"), W.resolution)
    sets = dict(W.sets)
    sets[C("0:1")] = sorted(sets[C("0:1")] + [(lo, lo + 1)])
    rep = verify_witness(S, SparseWitness(W.eta, W.frame, W.resolution, sets))
    assert rep["counterexample"]["code"] == "DISJOINTNESS"


def test_witness_json_roundtrip():
    S = _chain(3)
    W = sparse_witness(S, largest_feasible_eta(S))
    W2 = SparseWitness.from_json(W.to_json())
    assert W2.sets == W.sets and W2.eta == W.eta and W2.frame == W.frame


def _disjoint_cover(W, Q):
    cubes = W.cubes(Q)
    assert sum(Fraction(c.volume) for c in cubes) == W.measure(Q)
    for i, a in enumerate(cubes):
        assert Q.contains(a)
        for b in cubes[i + 1:]:
            assert not a.intersects(b)


@given(st.integers(0, 10 ** 6), st.sampled_from([(1, 5), (2, 3)]))
@settings(max_examples=40, deadline=None)
def test_witness_property(seed, shape):
    n, d = shape
    U = TruncatedLattice(CANONICAL.cube_at((Fraction(0),) * n, 0), d)
    S = random_family(np.random.default_rng(seed), U, max_cubes=60)
    eta = largest_feasible_eta(S)
    W = sparse_witness(S, eta)
    assert verify_witness(S, W)["passed"]
    assert 1 / W.eta >= carleson_constant(S)
    for Q in list(S)[:10]:
        _disjoint_cover(W, Q)
    # geometric disjointness across cubes
    pieces = [(Q, c) for Q in S for c in W.cubes(Q)]
    pieces.sort(key=lambda t: t[1].sort_key())
    total = sum(Fraction(c.volume) for _, c in pieces)
    assert total <= Fraction(frame_cube(S).volume)


def test_stack_examples():
    for M in (1, 2, 3):
        assert detect_stack(_full(4), 1, M) == C("0:1")
        ch = _chain(5)
        assert detect_stack(ch, Fraction(1, 2 ** M), M) == C("0:1")
        assert detect_stack(ch, Fraction(1, 2 ** M) + Fraction(1, 1024), M) is None
        assert detect_stack(fam("0:1/2", "1/2:1/2"), Fraction(1, 100), M) is None


@given(st.integers(0, 10 ** 6), st.sampled_from([Fraction(1, 8), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]), st.integers(1, 4))
@settings(max_examples=80, deadline=None)
def test_noeta_property(seed, eta, M):
    U = TruncatedLattice(C("0:1"), 5)
    S = random_family(np.random.default_rng(seed), U)
    lam = carleson_constant(S)
    Q = detect_stack(S, eta, M)
    if Q is None:
        assert lam <= M / (1 - eta)
    else:
        assert (M + 1) * eta <= lam


def test_split_examples():
    ch = _chain(5)
    parts = split_family(ch, 2)
    bound = 1 + (carleson_constant(ch) - 1) / 2
    assert all(carleson_constant(p) <= bound for p in parts)
    assert [len(p) for p in parts] == [3, 3]
    parts = split_family(fam("0:1"), 3)
    assert [len(p) for p in parts] == [1, 0, 0]
    full = _full(4)
    parts = split_family(full, 4)
    # five generations in four classes: generations 0 and 4 share a class
    assert [carleson_constant(p) for p in parts] == [2, 1, 1, 1]
    assert 1 + (carleson_constant(full) - 1) / 4 == 2


@given(st.integers(0, 10 ** 6), st.integers(2, 4))
@settings(max_examples=60, deadline=None)
def test_split_property(seed, m):
    U = TruncatedLattice(C("0,0:1"), 3) if seed % 3 == 0 else TruncatedLattice(C("0:1"), 6)
    S = random_family(np.random.default_rng(seed), U)
    parts = split_family(S, m)
    assert len(parts) == m
    assert set().union(*[p.as_set() for p in parts]) == S.as_set()
    assert sum(len(p) for p in parts) == len(S)
    bound = 1 + (carleson_constant(S) - 1) / m
    for p in parts:
        if len(p):
            assert carleson_constant(p) <= bound


@given(st.integers(0, 10 ** 6))
@settings(max_examples=40, deadline=None)
def test_augmentation_constant(seed):
    rng = np.random.default_rng(seed)
    U = TruncatedLattice(C("0:1"), 5)
    S = random_family(rng, U, style="iid")
    lam0 = carleson_constant(S)
    fams = {}
    for Q in S:
        sub = random_family(rng, U.subtree(Q)).union(CubeFamily([Q]))
        fams[Q] = sub
    lam = max(carleson_constant(f) for f in fams.values())
    assert carleson_constant(augment(S, fams)) <= lam * (lam0 + 1)
