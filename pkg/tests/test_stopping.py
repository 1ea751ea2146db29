from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dyc.carleson import carleson_constant
from dyc.errors import DomainError, PredicateInvalid
from dyc.forest import CubeFamily, roof
from dyc.generators import random_family, random_predicate
from dyc.lattice import CANONICAL, TruncatedLattice
from dyc.stopping import augment, augment_stop, max_disjoint_failing_mass, stop

from conftest import C, fam

U3 = TruncatedLattice(C("0:1"), 3)


def _gap(Q, R):
    return CANONICAL.generation(R) - CANONICAL.generation(Q)


def _oracle_stop(Q, P, cubes):
    # literal definition: R' is a one-step stop of R if P(R, R') fails and holds strictly between
    out, todo = {Q}, [Q]
    while todo:
        R = todo.pop()
        for R2 in cubes:
            if R2 == R or not R.contains(R2) or P(R, R2):
                continue
            if all(P(R, M) for M in cubes if M not in (R, R2) and R.contains(M) and M.contains(R2)):
                if R2 not in out:
                    out.add(R2)
                    todo.append(R2)
    return out


def test_stop_always_true():
    assert stop(C("0:1"), lambda a, b: True, U3) == fam("0:1")


def test_stop_generation_gap():
    S = stop(C("0:1"), lambda a, b: _gap(a, b) <= 1, U3)
    gens = sorted({CANONICAL.generation(Q) for Q in S})
    assert gens == [0, 2] and len(S) == 5


def test_stop_single_failing_child():
    child = C("1/2:1/2")
    P = lambda a, b: not (a == C("0:1") and b == child)
    assert stop(C("0:1"), P, U3) == fam("0:1", "1/2:1/2")


def test_stop_invalid_predicate():
    with pytest.raises(PredicateInvalid):
        stop(C("0:1"), lambda a, b: False, U3)
    with pytest.raises(DomainError):
        stop(C("4:1"), lambda a, b: True, U3)


def test_augment_examples():
    S = fam("0:1", "0:1/2")
    assert augment(S, lambda Q: {Q}) == S
    F = {C("0:1"): set(TruncatedLattice(C("0:1"), 2).cubes()), C("0:1/2"): {C("0:1/2")}}
    assert augment(S, F) == fam("0:1", "1/2:1/2", "1/2:1/4", "3/4:1/4", "0:1/2")
    T = set(TruncatedLattice(C("0:1"), 2).cubes())
    assert augment(fam("0:1"), {C("0:1"): T}) == CubeFamily(T)
    with pytest.raises(DomainError):
        augment(S, {C("0:1"): set(), C("0:1/2"): {C("0:1/2")}})


@given(st.integers(0, 10 ** 6), st.floats(0.05, 0.6), st.sampled_from([(1, 4), (2, 2)]))
@settings(max_examples=60, deadline=None)
def test_stop_matches_definition(seed, rate, shape):
    n, d = shape
    U = TruncatedLattice(CANONICAL.cube_at((Fraction(0),) * n, 0), d)
    P = random_predicate(seed, rate)
    cubes = U.cubes()
    S = stop(U.top, P, U)
    assert S.as_set() == _oracle_stop(U.top, P, cubes)
    # roof property
    for R in cubes:
        assert P(roof(S, R), R)
    # self-similarity
    for Q in S:
        inside = {R for R in S if Q.contains(R)}
        assert inside == stop(Q, P, U).as_set()


@given(st.integers(0, 10 ** 6), st.floats(0.05, 0.6))
@settings(max_examples=40, deadline=None)
def test_augment_stop_equivalent(seed, rate):
    U = TruncatedLattice(C("0:1"), 4)
    rng = np.random.default_rng(seed)
    S = random_family(rng, U)
    P = random_predicate(seed, rate)
    fast = augment_stop(S, P, U)
    slow = augment(S, lambda Q: stop(Q, P, U))
    assert fast == slow
    assert S.as_set() <= fast.as_set()
    # augmented roof property
    for R in U.cubes():
        if roof(S, R) is not None:
            assert P(roof(fast, R), R)


@given(st.integers(0, 10 ** 6), st.floats(0.02, 0.5))
@settings(max_examples=40, deadline=None)
def test_small_failing_mass_gives_carleson(seed, rate):
    U = TruncatedLattice(C("0:1"), 4)
    P = random_predicate(seed, rate)
    eta = max(max_disjoint_failing_mass(Q, P, U) / Q.volume for Q in U.cubes())
    if eta < 1:
        assert carleson_constant(stop(U.top, P, U)) <= 1 / (1 - eta)
