"""Half-open axis-parallel cubes with exact coordinates.

``Cube`` has dyadic-rational corner and side (triples like ``3/4`` are fine).
``RationalCube`` has the same layout over :class:`fractions.Fraction` and is
what ``dilate`` returns for non-dyadic factors or what users pass in for
arbitrary cubes.
"""

from __future__ import annotations

import json
from fractions import Fraction
from itertools import product

from .dyadic import DyadicRational, as_dyadic, as_fraction, fmt_rational, is_dyadic, parse_rational
from .errors import DomainError

__all__ = ["Cube", "RationalCube", "make_cube", "parse_cube", "cube_from_json"]


class _BaseCube:
    __slots__ = ("_corner", "_side", "_hash")

    _num = staticmethod(as_fraction)

    def __init__(self, corner, side):
        corner = tuple(self._num(c) for c in corner)
        side = self._num(side)
        if not corner:
            raise DomainError("cube dimension must be positive")
        if side <= 0:
            raise DomainError("cube side must be positive")
        self._corner = corner
        self._side = side
        self._hash = None

    # --- fields ----------------------------------------------------------
    @property
    def dim(self) -> int:
        return len(self._corner)

    @property
    def corner(self) -> tuple:
        return self._corner

    @property
    def side(self):
        return self._side

    @property
    def volume(self):
        return self._side ** len(self._corner)

    @property
    def center(self) -> tuple:
        h = self._side / 2
        return tuple(c + h for c in self._corner)

    @property
    def far(self) -> tuple:
        """The corner opposite ``corner`` (excluded from the cube)."""
        return tuple(c + self._side for c in self._corner)

    def _make(self, corner, side):
        return type(self)(corner, side)

    # --- geometry --------------------------------------------------------
    def children(self) -> list:
        h = self._side / 2
        out = []
        for eps in product((0, 1), repeat=self.dim):
            out.append(self._make(tuple(c + h if e else c for c, e in zip(self._corner, eps)), h))
        return out

    def triple(self):
        return self._make(self._corner, 3 * self._side)

    def dilate(self, t):
        t = as_fraction(t) if not isinstance(t, DyadicRational) else t
        if t < 1:
            raise DomainError(f"dilation factor must be >= 1, got {t}")
        if t == 1:
            return self
        side = t * self._side
        shift = (t - 1) * self._side / 2
        corner = tuple(c - shift for c in self._corner)
        if is_dyadic(t) and isinstance(self, Cube):
            return Cube(corner, side)
        return RationalCube(corner, side)

    def _check_dim(self, other):
        if len(other.corner) != len(self._corner):
            raise DomainError(f"dimension mismatch: {self.dim} vs {len(other.corner)}")

    def contains_point(self, p) -> bool:
        if len(p) != len(self._corner):
            raise DomainError("dimension mismatch")
        s = self._side
        return all(c <= x < c + s for c, x in zip(self._corner, p))

    def contains(self, other) -> bool:
        self._check_dim(other)
        s, t = self._side, other.side
        if t > s:
            return False
        return all(a <= b and b + t <= a + s for a, b in zip(self._corner, other.corner))

    def intersects(self, other) -> bool:
        self._check_dim(other)
        s, t = self._side, other.side
        return all(a < b + t and b < a + s for a, b in zip(self._corner, other.corner))

    def overlap_volume(self, other) -> Fraction:
        self._check_dim(other)
        v = Fraction(1)
        for a, b in zip(self._corner, other.corner):
            lo = max(as_fraction(a), as_fraction(b))
            hi = min(as_fraction(a + self._side), as_fraction(b + other.side))
            if hi <= lo:
                return Fraction(0)
            v *= hi - lo
        return v

    # --- identity --------------------------------------------------------
    def sort_key(self):
        """Larger cubes first, then lexicographic corner."""
        return (-as_fraction(self._side), tuple(as_fraction(c) for c in self._corner))

    def __eq__(self, other):
        if not isinstance(other, _BaseCube):
            return NotImplemented
        return self._side == other._side and self._corner == other._corner

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self._side, self._corner))
            self._hash = h
        return h

    def __repr__(self):
        if self.dim == 1:
            return f"[{self._corner[0]}, {self._corner[0] + self._side})"
        return "x".join(f"[{c}, {c + self._side})" for c in self._corner)

    def to_json(self) -> dict:
        return {"dim": self.dim, "corner": [_enc(c) for c in self._corner], "side": _enc(self._side)}

    def compact(self) -> str:
        return ",".join(fmt_rational(c) for c in self._corner) + ":" + fmt_rational(self._side)


class Cube(_BaseCube):
    """Cube with dyadic-rational corner and side."""

    __slots__ = ()
    _num = staticmethod(as_dyadic)

    def __reduce__(self):
        return (Cube, (self._corner, self._side))


class RationalCube(_BaseCube):
    """Cube with arbitrary rational corner and side."""

    __slots__ = ()

    def __reduce__(self):
        return (RationalCube, (self._corner, self._side))

    def to_cube(self) -> Cube:
        return Cube(self._corner, self._side)


def _enc(x):
    if isinstance(x, DyadicRational):
        return {"m": str(x.mantissa), "e": x.exponent}
    return fmt_rational(x)


def _dec(obj):
    if isinstance(obj, dict):
        return DyadicRational(int(obj["m"]), int(obj["e"]))
    if isinstance(obj, str):
        return parse_rational(obj)
    if isinstance(obj, int):
        return obj
    raise DomainError(f"cannot decode number {obj!r}")


def make_cube(corner, side):
    """Build a ``Cube`` when all coordinates are dyadic, else a ``RationalCube``."""
    vals = list(corner) + [side]
    if all(is_dyadic(v) for v in vals):
        return Cube(corner, side)
    return RationalCube(corner, side)


def cube_from_json(obj):
    if isinstance(obj, str):
        return parse_cube(obj)
    corner = [_dec(c) for c in obj["corner"]]
    side = _dec(obj["side"])
    if len(corner) != int(obj.get("dim", len(corner))):
        raise DomainError("corner length does not match dim")
    return make_cube(corner, side)


def parse_cube(text: str):
    """Parse ``"x1,...,xn:side"`` or a JSON object into a cube."""
    text = text.strip()
    if text.startswith("{"):
        return cube_from_json(json.loads(text))
    if ":" not in text:
        raise DomainError(f"cube must look like 'x1,x2:side', got {text!r}")
    head, side = text.split(":", 1)
    return make_cube([parse_rational(t) for t in head.split(",")], parse_rational(side))
