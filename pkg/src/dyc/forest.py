"""Finite cube families and their nesting forest.

Two family cubes are joined by an edge when one strictly contains the other
with no family cube in between.  Since lattice cubes are either nested or
disjoint, every cube has at most one forest parent and the graph is a forest.
"""

from __future__ import annotations

import math
from collections import deque

from .cube import Cube, _BaseCube, cube_from_json
from .dyadic import as_fraction
from .errors import DomainError, NotInFamily, NotInLattice
from .lattice import CANONICAL, TruncatedLattice
from .shifted import LatticeDescriptor

__all__ = ["CubeFamily", "Forest", "build_forest", "distance", "roof", "house", "lattice_distance"]


class CubeFamily:
    """Deduplicated finite set of lattice members, ordered by (-side, corner)."""

    __slots__ = ("lattice", "cubes", "_set", "_forest", "_max_side", "_dim")

    def __init__(self, cubes=(), lattice=None, validate: bool = True):
        self.lattice = lattice or CANONICAL
        uniq = set(cubes)
        if validate:
            for Q in uniq:
                if not self.lattice.is_member(Q):
                    raise NotInLattice(f"{Q!r} is not a member of {self.lattice!r}")
        self.cubes = tuple(sorted(uniq, key=_BaseCube.sort_key))
        self._set = frozenset(uniq)
        dims = {Q.dim for Q in uniq}
        if len(dims) > 1:
            raise DomainError("family mixes dimensions")
        self._dim = dims.pop() if dims else None
        self._max_side = self.cubes[0].side if self.cubes else None
        self._forest = None

    @property
    def dim(self):
        return self._dim

    @property
    def max_side(self):
        return self._max_side

    def __len__(self):
        return len(self.cubes)

    def __iter__(self):
        return iter(self.cubes)

    def __contains__(self, Q):
        return Q in self._set

    def __eq__(self, other):
        return isinstance(other, CubeFamily) and self._set == other._set

    def __hash__(self):
        return hash(self._set)

    def __repr__(self):
        return f"CubeFamily({list(self.cubes)!r})"

    def as_set(self) -> frozenset:
        return self._set

    def union(self, other) -> "CubeFamily":
        return CubeFamily(self._set | set(other), self.lattice, validate=False)

    def restrict(self, cubes) -> "CubeFamily":
        return CubeFamily([Q for Q in cubes if Q in self._set], self.lattice, validate=False)

    def inside(self, Q) -> list:
        """Family cubes contained in ``Q`` (including ``Q`` itself when present)."""
        return [P for P in self.cubes if Q.contains(P)]

    def forest(self) -> "Forest":
        if self._forest is None:
            self._forest = Forest(self)
        return self._forest

    def total_volume(self):
        return sum((as_fraction(Q.volume) for Q in self.cubes), as_fraction(0))

    def to_json(self) -> dict:
        return {"lattice": self.lattice.to_json(), "cubes": [Q.to_json() for Q in self.cubes]}

    @classmethod
    def from_json(cls, obj, validate: bool = True) -> "CubeFamily":

        cubes = [cube_from_json(c) for c in obj["cubes"]]
        lat = obj.get("lattice") or {}
        if lat.get("labels"):
            dim = lat.get("dim") or (cubes[0].dim if cubes else None)
            lattice = LatticeDescriptor.from_json(lat, dim)
        else:
            lattice = CANONICAL
        return cls(cubes, lattice, validate=validate)


def _ascend(S: CubeFamily, Q):
    """Yield the strict lattice ancestors of ``Q`` up to the family's largest side."""
    lat = S.lattice
    top = S.max_side
    R = Q
    while R.side < top:
        R = lat.parent(R)
        yield R


class Forest:
    """Nesting forest of a family: parent/children maps, depths, roots, components."""

    def __init__(self, family: CubeFamily):
        self.family = family
        parent = {}
        children = {Q: [] for Q in family.cubes}
        for Q in family.cubes:
            p = None
            for R in _ascend(family, Q):
                if R in family:
                    p = R
                    break
            parent[Q] = p
            if p is not None:
                children[p].append(Q)
        self.parent = parent
        self.children = children
        depth, root = {}, {}
        # cubes are sorted big-first, so a parent is always processed before its children
        for Q in family.cubes:
            p = parent[Q]
            if p is None:
                depth[Q], root[Q] = 0, Q
            else:
                depth[Q], root[Q] = depth[p] + 1, root[p]
        self.depth = depth
        self.root = root
        self.roots = [Q for Q in family.cubes if parent[Q] is None]
        comps = {r: [] for r in self.roots}
        for Q in family.cubes:
            comps[root[Q]].append(Q)
        self.components = [comps[r] for r in self.roots]

    @property
    def edges(self) -> list:
        return [(p, q) for q, p in self.parent.items() if p is not None]

    def _need(self, Q):
        if Q not in self.family:
            raise NotInFamily(f"{Q!r} is not in the family")

    def distance(self, Q, Q2):
        self._need(Q)
        self._need(Q2)
        if self.root[Q] != self.root[Q2]:
            return math.inf
        a, b = Q, Q2
        da, db = self.depth[a], self.depth[b]
        while da > db:
            a, da = self.parent[a], da - 1
        while db > da:
            b, db = self.parent[b], db - 1
        while a != b:
            a, b = self.parent[a], self.parent[b]
            da -= 1
        return self.depth[Q] + self.depth[Q2] - 2 * da

    def descendants(self, Q) -> list:
        """Forest descendants of ``Q`` including ``Q``, in breadth-first order."""
        self._need(Q)
        out, queue = [], deque([Q])
        while queue:
            R = queue.popleft()
            out.append(R)
            queue.extend(self.children[R])
        return out

    def layer(self, Q, M: int) -> list:
        """Family cubes below ``Q`` at forest distance exactly ``M``."""
        cur = [Q]
        for _ in range(M):
            cur = [c for R in cur for c in self.children[R]]
        return cur


def build_forest(S: CubeFamily) -> Forest:
    return S.forest()


def distance(F, Q, Q2):
    if isinstance(F, CubeFamily):
        F = F.forest()
    return F.distance(Q, Q2)


def roof(S: CubeFamily, R):
    """Smallest family cube containing ``R`` (``R`` itself if it is in the family), or None."""
    if R in S:
        return R
    if not S.cubes:
        return None
    for P in _ascend(S, R):
        if P in S:
            return P
    return None


def house(S: CubeFamily, Q, universe: TruncatedLattice) -> list:
    """Universe cubes whose roof is ``Q``."""
    if Q not in S:
        raise NotInFamily(f"{Q!r} is not in the family")
    if Q in universe:
        start = Q
    elif Q.contains(universe.top) and roof(S, universe.top) == Q:
        start = universe.top
    else:
        return []
    lat = universe.lattice
    bottom = universe.side_at(universe.depth)
    out, queue = [], deque([start])
    while queue:
        R = queue.popleft()
        out.append(R)
        if R.side == bottom:
            continue
        for C in lat.children(R):
            if C not in S:
                queue.append(C)
    return out


def lattice_distance(Q, R) -> int:
    """Generation difference between nested lattice cubes."""
    r = as_fraction(Q.side) / as_fraction(R.side)
    if r < 1:
        r = 1 / r
    if r.denominator != 1 or r.numerator & (r.numerator - 1):
        raise DomainError("cubes are not from one lattice")
    return r.numerator.bit_length() - 1
