"""Mod-3 corner classes, shifted lattices of triple cubes, and iterated covers.

A level-``l`` lattice is described by the labels ``j_1..j_l`` picked at each
tripling step.  Its cubes have sides ``3**l * 2**-k``.  Level-``l`` corners
are labelled after normalising by ``(x - o_l) / 3**l`` where the origins obey
``o_0 = 0`` and ``o_{i+1} = o_i + 3**i * j_{i+1}``; the normalised corners are
dyadic, so the level-0 label rule applies unchanged.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from itertools import product

from .cube import Cube, RationalCube, _BaseCube
from .dyadic import DyadicRational, as_dyadic, as_fraction
from .errors import DomainError, NotInLattice
from .lattice import CANONICAL, TruncatedLattice, _canonical_cube_at, _canonical_member, _children

__all__ = [
    "label_of",
    "equivalent",
    "all_labels",
    "LatticeDescriptor",
    "corner_label",
    "containing_triple",
    "verify_three_lattice",
    "cover_cubes",
]


def _label1(x: DyadicRational) -> int:
    e = x.exponent
    m = e + (e & 1)
    return ((x.mantissa << (m - e)) % 3) if e else x.mantissa % 3


def label_of(x) -> tuple:
    """Class label of a dyadic vector: ``2**m x mod 3`` for the least even m making it integral."""
    return tuple(_label1(as_dyadic(c)) for c in x)


def equivalent(x, y) -> bool:
    """Brute-force relation: ``2**m (x - y)`` lies in ``(3Z)^n`` for some (hence all large) even m."""
    diffs = [as_fraction(a) - as_fraction(b) for a, b in zip(x, y)]
    m = max(d.denominator.bit_length() - 1 for d in diffs)
    m += m & 1
    return all((d * (1 << m)).denominator == 1 and int(d * (1 << m)) % 3 == 0 for d in diffs)


def all_labels(dim: int) -> list:
    return list(product(range(3), repeat=dim))


def _pow2(i: int) -> Fraction:
    return Fraction(1, 1 << i) if i >= 0 else Fraction(1 << -i)


def _ceil_log2_inverse(r: Fraction) -> int:
    """Smallest integer i with ``2**-i <= r`` for positive rational r."""
    i = r.denominator.bit_length() - r.numerator.bit_length()
    while _pow2(i) > r:
        i += 1
    while _pow2(i - 1) <= r:
        i -= 1
    return i


class LatticeDescriptor:
    """Level-``l`` lattice of iterated triples; level 0 is the canonical lattice."""

    __slots__ = ("labels", "dim", "origins", "_hash")

    def __init__(self, labels=(), dim: int | None = None):
        labels = tuple(tuple(int(v) for v in j) for j in labels)
        if dim is None:
            if not labels:
                raise DomainError("dimension required for a level-0 descriptor")
            dim = len(labels[0])
        for j in labels:
            if len(j) != dim or any(v not in (0, 1, 2) for v in j):
                raise DomainError(f"bad class label {j}")
        self.labels = labels
        self.dim = dim
        o = (0,) * dim
        origins = [o]
        for i, j in enumerate(labels):
            o = tuple(a + 3 ** i * b for a, b in zip(o, j))
            origins.append(o)
        self.origins = tuple(origins)
        self._hash = hash(("lattice", labels, dim))

    @property
    def level(self) -> int:
        return len(self.labels)

    def scale(self) -> int:
        return 3 ** self.level

    def extend(self, j) -> "LatticeDescriptor":
        return _extend(self, tuple(j))

    def __repr__(self):
        return f"LatticeDescriptor(labels={list(self.labels)}, dim={self.dim})"

    def __eq__(self, other):
        if isinstance(other, LatticeDescriptor):
            return self.labels == other.labels and self.dim == other.dim
        return self.level == 0 and other is CANONICAL

    def __hash__(self):
        return self._hash

    def to_json(self) -> dict:
        return {"level": self.level, "dim": self.dim, "labels": [list(j) for j in self.labels]}

    @classmethod
    def from_json(cls, obj, dim: int | None = None) -> "LatticeDescriptor":
        return cls(obj.get("labels", []), obj.get("dim", dim))

    # --- labels ----------------------------------------------------------
    def corner_label(self, x) -> tuple:
        """Label of a corner under this level's equivalence (normalised by the origin)."""
        return self._label_at(x, self.level)

    def _label_at(self, x, level: int) -> tuple:
        o = self.origins[level]
        t = 3 ** level
        out = []
        for a, b in zip(x, o):
            y = (as_fraction(a) - b) / t
            d = y.denominator
            if d & (d - 1):
                raise DomainError(f"normalised corner {y} is not dyadic")
            out.append(_label1(DyadicRational.from_value(y)))
        return tuple(out)

    # --- membership ------------------------------------------------------
    def _k(self, side) -> int | None:
        r = as_fraction(side) / self.scale()
        d, nu = r.denominator, r.numerator
        if nu == 1 and not d & (d - 1):
            return d.bit_length() - 1
        if d == 1 and not nu & (nu - 1):
            return -(nu.bit_length() - 1)
        return None

    def is_member(self, Q) -> bool:
        return _member(self, Q)

    def generation(self, Q) -> int:
        if not self.is_member(Q):
            raise NotInLattice(f"{Q!r} is not a member of {self!r}")
        return self._k(Q.side)

    def cube_at(self, point, k: int) -> Cube:
        return _cube_at(self, tuple(as_fraction(p) for p in point), k)

    def parent(self, Q: Cube) -> Cube:
        k = self.generation(Q)
        return _cube_at(self, tuple(as_fraction(c) for c in Q.center), k - 1)

    def children(self, Q: Cube) -> tuple:
        return _children(Q)

    def containing_triple(self, Q: Cube, j) -> Cube:
        return _containing_triple(self, Q, tuple(j))


@lru_cache(maxsize=None)
def _extend(d: LatticeDescriptor, j: tuple) -> LatticeDescriptor:
    return LatticeDescriptor(d.labels + (j,), d.dim)


@lru_cache(maxsize=1 << 18)
def _member(d: LatticeDescriptor, Q) -> bool:
    if Q.dim != d.dim:
        return False
    k = d._k(Q.side)
    if k is None:
        return False
    base = Fraction(1, 1 << k) if k >= 0 else Fraction(1 << -k)
    try:
        W = Cube(Q.corner, base)
    except DomainError:
        return False
    if not _canonical_member(W):
        return False
    for i, j in enumerate(d.labels):
        try:
            if d._label_at(Q.corner, i) != j:
                return False
        except DomainError:
            return False
    return True


@lru_cache(maxsize=1 << 16)
def _cube_at(d: LatticeDescriptor, point: tuple, k: int) -> Cube:
    W = _canonical_cube_at(point, k)
    for i, j in enumerate(d.labels):
        W = _containing_triple(_prefix(d, i), W, j)
    return W


@lru_cache(maxsize=None)
def _prefix(d: LatticeDescriptor, level: int) -> LatticeDescriptor:
    return LatticeDescriptor(d.labels[:level], d.dim)


def _candidates(Q: Cube):
    s = Q.side
    for delta in product(range(3), repeat=Q.dim):
        yield delta, tuple(c - s * t for c, t in zip(Q.corner, delta))


@lru_cache(maxsize=1 << 18)
def _containing_triple(d: LatticeDescriptor, Q: Cube, j: tuple) -> Cube:
    hits = [x for _, x in _candidates(Q) if d.corner_label(x) == j]
    if len(hits) != 1:
        raise AssertionError(f"containing triple of {Q!r} with label {j} is not unique: {len(hits)} candidates")
    return Cube(hits[0], 3 * Q.side)


def _descriptor(lattice, dim: int) -> LatticeDescriptor:
    if isinstance(lattice, LatticeDescriptor):
        return lattice
    if lattice is None or lattice is CANONICAL or lattice.level == 0:
        return LatticeDescriptor((), dim)
    raise DomainError(f"unsupported lattice {lattice!r}")


def corner_label(x, lattice=None) -> tuple:
    return _descriptor(lattice, len(x)).corner_label(x)


def containing_triple(Q: Cube, j, lattice=None) -> Cube:
    d = _descriptor(lattice, Q.dim)
    if not d.is_member(Q):
        raise NotInLattice(f"{Q!r} is not a member of {d!r}")
    return d.containing_triple(Q, j)


def verify_three_lattice(region: TruncatedLattice, label_fn=None) -> dict:
    """Check the three-lattice statement on every generation of ``region``.

    (a) each lattice cube meeting the region window carries exactly one label,
        agreeing with the brute-force equivalence against class representatives;
    (b) for every generation and label, the labelled triples cover each
        generation cell of the region exactly once, and the labelled tiling at
        the next generation refines the current one;
    (c) the containing triple of each region cube and label is unique.

    ``label_fn`` replaces the label assignment in (a)/(b) for negative controls.
    """
    n = region.dim
    d = _descriptor(region.lattice, n)
    label_fn = label_fn or d.corner_label
    labels = all_labels(n)
    reps = [tuple(o + 3 ** d.level * v for o, v in zip(d.origins[d.level], j)) for j in labels]
    fail = None
    counts = {"cubes": 0, "triples": 0, "cells": 0}
    classes = set()
    for i in range(region.depth + 1):
        s = region.side_at(i)
        cells = region.level(i)
        cover = {}
        # every lattice cube whose triple can meet the region
        span = (1 << i) + 2
        for u in product(range(span), repeat=n):
            x = tuple(c + s * (a - 2) for c, a in zip(region.top.corner, u))
            counts["triples"] += 1
            lab = label_fn(x)
            classes.add(lab)
            brute = [j for j, r in zip(labels, reps) if equivalent(_scaled(x, d), _scaled(r, d))]
            if brute != [lab]:
                fail = {"part": "a", "corner": [str(c) for c in x], "label": list(lab), "brute": [list(b) for b in brute]}
                break
            for dv in product(range(3), repeat=n):
                cell = tuple(a - 2 + b for a, b in zip(u, dv))
                if all(0 <= t < (1 << i) for t in cell):
                    cover.setdefault((lab, cell), 0)
                    cover[(lab, cell)] += 1
        if fail:
            break
        for Q in cells:
            counts["cells"] += 1
            off = region.offset(Q)[1]
            for j in labels:
                if cover.get((j, off), 0) != 1:
                    fail = {"part": "b", "cube": Q.to_json(), "label": list(j), "cover_count": cover.get((j, off), 0)}
                    break
                try:
                    T = d.containing_triple(Q, j)
                except AssertionError as exc:
                    fail = {"part": "c", "cube": Q.to_json(), "label": list(j), "error": str(exc)}
                    break
                if not T.contains(Q) or T.side != 3 * Q.side:
                    fail = {"part": "c", "cube": Q.to_json(), "label": list(j), "triple": T.to_json()}
                    break
                if i > 0:
                    P = d.containing_triple(d.parent(Q), j)
                    if T not in _children(P):
                        fail = {"part": "b", "reason": "refinement", "cube": Q.to_json(), "label": list(j)}
                        break
            counts["cubes"] += 1
            if fail:
                break
        if fail:
            break
    return {
        "check": "three_lattice",
        "scope": region.to_json(),
        "passed": fail is None,
        "classes": len(classes),
        "expected_classes": 3 ** n,
        "counts": counts,
        "counterexample": fail,
    }


def _scaled(x, d: LatticeDescriptor):
    return tuple(as_fraction(a) / 3 ** d.level for a in x)


def cover_cubes(cubes) -> tuple:
    """Cover arbitrary rational cubes by members of one iterated-triple lattice.

    Returns ``(descriptor, covers)`` with ``covers[k] ⊇ cubes[k]`` and
    ``|covers[k]| <= 3**(m n) |cubes[k]|``.
    """
    cubes = list(cubes)
    if not cubes:
        raise DomainError("cover_cubes needs at least one cube")
    n = cubes[0].dim
    if any(Q.dim != n for Q in cubes):
        raise DomainError("all cubes must share one dimension")
    d = LatticeDescriptor((), n)
    covers: list = []
    for Q in cubes:
        ell = as_fraction(Q.side)
        k = _ceil_log2_inverse(ell / d.scale())
        W = d.cube_at(Q.corner, k)
        j = d.corner_label(W.corner)
        covers = [d.containing_triple(C, j) for C in covers]
        covers.append(W.triple())
        d = d.extend(j)
    return d, covers
