"""Stopping times over a truncated lattice and family augmentation."""

from __future__ import annotations

from collections import deque
from fractions import Fraction

from .dyadic import as_fraction
from .errors import DomainError, PredicateInvalid
from .forest import CubeFamily, roof
from .lattice import TruncatedLattice

__all__ = ["stop", "augment", "augment_stop", "max_disjoint_failing_mass"]


def _visit(R, P):
    if not P(R, R):
        raise PredicateInvalid(f"P(Q, Q) is false for Q = {R!r}")


def _one_step(R, P, universe: TruncatedLattice, blocked=None) -> list:
    """First cubes below ``R`` (inside the universe) where ``P(R, .)`` fails."""
    lat = universe.lattice
    bottom = universe.side_at(universe.depth)
    if R.side == bottom:
        return []
    out = []
    queue = deque(lat.children(R))
    while queue:
        C = queue.popleft()
        if blocked is not None and C in blocked:
            continue
        if not P(R, C):
            out.append(C)
        elif C.side != bottom:
            queue.extend(lat.children(C))
    return out


def stop(Q, P, universe: TruncatedLattice) -> CubeFamily:
    """The family reached from ``Q`` by repeated one-step stopping under ``P``.

    ``P(R, R2)`` is called for ``R ⊇ R2`` only on pairs the descent visits.
    Bottom-generation cubes of the universe never produce further stops.
    """
    if Q not in universe:
        raise DomainError(f"{Q!r} is not in the universe")
    out = []
    queue = deque([Q])
    while queue:
        R = queue.popleft()
        _visit(R, P)
        out.append(R)
        queue.extend(_one_step(R, P, universe))
    return CubeFamily(out, universe.lattice, validate=False)


def augment(S: CubeFamily, F) -> CubeFamily:
    """Union over ``Q ∈ S`` of the cubes of ``F(Q)`` not lying under a smaller S-cube.

    ``F`` is a mapping or a callable returning an iterable of cubes.
    """
    get = F.__getitem__ if hasattr(F, "__getitem__") else F
    out = set()
    for Q in S:
        fam = get(Q)
        fam = fam if isinstance(fam, (set, frozenset, CubeFamily)) else set(fam)
        if Q not in fam:
            raise DomainError(f"F(Q) must contain Q = {Q!r}")
        for R in fam:
            if roof(S, R) == Q:
                out.add(R)
    return CubeFamily(out, S.lattice, validate=False)


def augment_stop(S: CubeFamily, P, universe: TruncatedLattice) -> CubeFamily:
    """``augment(S, Q -> stop(Q, P))`` with the descent pruned at smaller S-cubes.

    Equivalent to the generic version because everything under a smaller
    S-cube is discarded by the augmentation anyway.
    """
    S_set = S.as_set()
    out = set()
    for Q in S:
        if Q not in universe:
            raise DomainError(f"{Q!r} is not in the universe")
        queue = deque([Q])
        while queue:
            R = queue.popleft()
            _visit(R, P)
            out.add(R)
            queue.extend(_one_step(R, P, universe, blocked=S_set))
    return CubeFamily(out | S_set, S.lattice, validate=False)


def max_disjoint_failing_mass(Q, P, universe: TruncatedLattice) -> Fraction:
    """Largest total measure of pairwise disjoint ``Q2 ⊆ Q`` with ``P(Q, Q2)`` false."""
    lat = universe.lattice
    bottom = universe.side_at(universe.depth)

    def best(R) -> Fraction:
        own = as_fraction(R.volume) if (R != Q and not P(Q, R)) else Fraction(0)
        if R.side == bottom:
            return own
        below = sum((best(C) for C in lat.children(R)), Fraction(0))
        return max(own, below)

    return best(Q)
