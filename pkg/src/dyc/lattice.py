"""The canonical dyadic lattice and finite truncations of it.

The lattice is the union of the standard dyadic families under an expanding
chain of cubes ``Q_j = c_j + 2**j [0,1)^n`` with ``c_0 = 0`` and

    c_{j+1} = c_j            (j even)
    c_{j+1} = c_j - 2**j     (j odd)

so the chain alternates growing from the corner and from the opposite vertex:
``[0,1), [0,2), [-2,2), [-2,6), [-10,6), ...``.  A cube of side ``2**-k`` is a
member exactly when its corner is congruent to ``c_{max(-k,0)}`` modulo the
side in every coordinate.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache
from itertools import product

from .cube import Cube, RationalCube, _BaseCube
from .dyadic import DyadicRational, as_dyadic, as_fraction, is_dyadic
from .errors import DomainError, NotInLattice

__all__ = [
    "CanonicalLattice",
    "CANONICAL",
    "TruncatedLattice",
    "chain_corner",
    "chain_cube",
    "smallest_chain_cube_covering",
    "verify_multiresolution",
]


@lru_cache(maxsize=None)
def chain_corner(j: int) -> int:
    """Scalar corner coordinate ``c_j`` of the j-th chain cube."""
    if j < 0:
        raise DomainError("chain index must be non-negative")
    c = 0
    for i in range(j):
        if i & 1:
            c -= 1 << i
        # even steps keep the corner
    return c


def chain_cube(j: int, dim: int) -> Cube:
    c = chain_corner(j)
    return Cube((c,) * dim, 1 << j)


def _side_exponent(side) -> int | None:
    """k with ``side == 2**-k``, or None."""
    if not is_dyadic(side):
        return None
    k = as_dyadic(side).log2_exact()
    return None if k is None else -k


def smallest_chain_cube_covering(box: _BaseCube) -> int:
    """Smallest j such that the chain cube ``Q_j`` contains ``box``."""
    lo = min(as_fraction(c) for c in box.corner)
    hi = max(as_fraction(c) for c in box.far)
    j = 0
    while not (chain_corner(j) <= lo and hi <= chain_corner(j) + (1 << j)):
        j += 1
    return j


class CanonicalLattice:
    """Descriptor of the canonical lattice; stateless apart from caches."""

    level = 0
    labels: tuple = ()

    def __repr__(self):
        return "CanonicalLattice()"

    def __eq__(self, other):
        return type(other) is CanonicalLattice or (getattr(other, "level", None) == 0 and not getattr(other, "labels", ()))

    def __hash__(self):
        return hash(("lattice", ()))

    def to_json(self) -> dict:
        return {"level": 0, "labels": []}

    def scale(self) -> int:
        return 1

    # --- membership ------------------------------------------------------
    def is_member(self, Q) -> bool:
        return _canonical_member(Q)

    def generation(self, Q) -> int:
        if not _canonical_member(Q):
            raise NotInLattice(f"{Q!r} is not a member of the canonical lattice")
        return _side_exponent(Q.side)

    def cube_at(self, point, k: int) -> Cube:
        return _canonical_cube_at(tuple(as_fraction(p) for p in point), k)

    def parent(self, Q: Cube) -> Cube:
        k = self.generation(Q)
        return _canonical_parent(Q, k)

    def children(self, Q: Cube) -> list:
        return _children(Q)


@lru_cache(maxsize=1 << 18)
def _children(Q: Cube) -> tuple:
    return tuple(Q.children())


def _canonical_member(Q) -> bool:
    k = _side_exponent(Q.side)
    if k is None:
        return False
    if not all(is_dyadic(c) for c in Q.corner):
        return False
    c = chain_corner(max(-k, 0))
    for x in Q.corner:
        if not (as_dyadic(x) - c).scale2(k).is_integer():
            return False
    return True


@lru_cache(maxsize=1 << 16)
def _canonical_cube_at(point: tuple, k: int) -> Cube:
    c = chain_corner(max(-k, 0))
    s = Fraction(1, 1 << k) if k >= 0 else Fraction(1 << -k)
    corner = tuple(c + math.floor((p - c) / s) * s for p in point)
    return Cube(corner, s)


@lru_cache(maxsize=1 << 18)
def _canonical_parent(Q: Cube, k: int) -> Cube:
    return _canonical_cube_at(tuple(as_fraction(c) for c in Q.center), k - 1)


CANONICAL = CanonicalLattice()


class TruncatedLattice:
    """All lattice descendants of ``top`` down to ``depth`` generations below it."""

    __slots__ = ("top", "depth", "lattice", "gen_top", "_levels")

    def __init__(self, top: Cube, depth: int, lattice=None):
        lattice = lattice or CANONICAL
        if depth < 0:
            raise DomainError("depth must be non-negative")
        if not lattice.is_member(top):
            raise NotInLattice(f"top {top!r} is not a lattice member")
        self.top = top
        self.depth = int(depth)
        self.lattice = lattice
        self.gen_top = lattice.generation(top)
        self._levels = None

    def __repr__(self):
        return f"TruncatedLattice(top={self.top!r}, depth={self.depth})"

    @property
    def dim(self) -> int:
        return self.top.dim

    @property
    def gen_bottom(self) -> int:
        return self.gen_top + self.depth

    def count(self) -> int:
        n = self.dim
        return sum(1 << (n * i) for i in range(self.depth + 1))

    def side_at(self, i: int):
        return self.top.side.scale2(-i)

    def cube(self, i: int, u) -> Cube:
        """Cube of relative generation ``i`` with integer offset vector ``u``."""
        s = self.side_at(i)
        return Cube(tuple(c + s * a for c, a in zip(self.top.corner, u)), s)

    def level(self, i: int) -> list:
        """Cubes of relative generation ``i`` in row-major (last axis fastest) order."""
        if self._levels is None:
            self._levels = {}
        lv = self._levels.get(i)
        if lv is None:
            lv = [self.cube(i, u) for u in product(range(1 << i), repeat=self.dim)]
            self._levels[i] = lv
        return lv

    def levels(self) -> list:
        return [self.level(i) for i in range(self.depth + 1)]

    def cubes(self) -> list:
        out = []
        for i in range(self.depth + 1):
            out.extend(self.level(i))
        return out

    def cells(self) -> list:
        return self.level(self.depth)

    def rel_generation(self, Q) -> int | None:
        """Relative generation of ``Q`` inside the truncation, or None."""
        r = Fraction(as_fraction(self.top.side), as_fraction(Q.side))
        if r.denominator != 1 or r.numerator & (r.numerator - 1):
            return None
        i = r.numerator.bit_length() - 1
        return i if i <= self.depth else None

    def offset(self, Q):
        """Integer offset vector of an aligned cube inside the top, or None."""
        i = self.rel_generation(Q)
        if i is None:
            return None
        s = as_fraction(Q.side)
        u = []
        for a, b in zip(self.top.corner, Q.corner):
            t = (as_fraction(b) - as_fraction(a)) / s
            if t.denominator != 1 or not 0 <= t < (1 << i):
                return None
            u.append(int(t))
        return i, tuple(u)

    def __contains__(self, Q) -> bool:
        if not isinstance(Q, _BaseCube) or Q.dim != self.dim:
            return False
        return self.offset(Q) is not None

    def subtree(self, Q: Cube) -> "TruncatedLattice":
        """Truncation rooted at a member ``Q`` reaching the same bottom generation."""
        i = self.rel_generation(Q)
        if Q not in self:
            raise NotInLattice(f"{Q!r} is not in {self!r}")
        return TruncatedLattice(Q, self.depth - i, self.lattice)

    def to_json(self) -> dict:
        return {"top": self.top.to_json(), "depth": self.depth}


def verify_multiresolution(region: TruncatedLattice, tiles: dict | None = None) -> dict:
    """Check the multiresolution structure of a truncation.

    ``tiles`` optionally overrides the generation-indexed tile lists (used for
    negative controls).  For every generation the tiles must partition the
    top cube and be aligned as a regular tiling; every tile of the next
    generation must be a child of a tile of the current one; and the corner
    child of the first tile must be present (the criterion that forces the
    previous condition).
    """
    lat = region.lattice
    top = region.top
    n = top.dim
    tiles = tiles if tiles is not None else {i: region.level(i) for i in range(region.depth + 1)}
    fail = None
    checked = 0
    for i in range(region.depth + 1):
        cur = list(tiles.get(i, []))
        s = region.side_at(i)
        seen = set()
        for Q in cur:
            checked += 1
            if Q.side != s or not top.contains(Q) or not lat.is_member(Q):
                fail = {"generation": region.gen_top + i, "cube": Q.to_json(), "reason": "not an aligned member tile"}
                break
            off = region.offset(Q)
            if off is None or off[1] in seen:
                fail = {"generation": region.gen_top + i, "cube": Q.to_json(), "reason": "misaligned or overlapping tile"}
                break
            seen.add(off[1])
        if fail:
            break
        if len(seen) != 1 << (n * i):
            fail = {"generation": region.gen_top + i, "reason": "tiles do not cover the top cube", "count": len(seen)}
            break
        if i == 0:
            continue
        prev = set(tiles.get(i - 1, []))
        for Q in cur:
            if lat.parent(Q) not in prev or Q not in _children(lat.parent(Q)):
                fail = {"generation": region.gen_top + i, "cube": Q.to_json(), "reason": "not a child of a previous tile"}
                break
        if fail:
            break
        first = sorted(prev, key=lambda c: tuple(as_fraction(x) for x in c.corner))[0]
        corner_child = Cube(first.corner, first.side.scale2(-1))
        if corner_child not in set(cur):
            fail = {"generation": region.gen_top + i, "cube": first.to_json(), "reason": "corner child missing"}
            break
    return {
        "check": "multiresolution",
        "scope": region.to_json(),
        "passed": fail is None,
        "tiles_checked": checked,
        "counterexample": fail,
    }
