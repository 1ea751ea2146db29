"""Exact dyadic rationals ``m * 2**-e`` and small helpers for mixed exact arithmetic.

A :class:`DyadicRational` is always stored in canonical form: the exponent is
non-negative, and whenever it is positive the mantissa is odd.  Zero is
``(0, 0)``.  Sums, differences, products, comparisons and scaling by powers of
two stay inside the type; division by anything that is not a power of two
falls back to :class:`fractions.Fraction`.
"""

from __future__ import annotations

import numbers
from fractions import Fraction

from .errors import DomainError

__all__ = ["DyadicRational", "as_fraction", "as_dyadic", "is_dyadic", "parse_rational", "fmt_rational"]


def _strip(m: int, e: int) -> tuple[int, int]:
    if m == 0:
        return 0, 0
    if e < 0:
        return m << -e, 0
    if e and not m & 1:
        tz = (m & -m).bit_length() - 1
        k = tz if tz < e else e
        return m >> k, e - k
    return m, e


class DyadicRational:
    __slots__ = ("_m", "_e", "_hash")

    def __init__(self, mantissa: int = 0, exponent: int = 0):
        if not isinstance(mantissa, int) or not isinstance(exponent, int):
            raise DomainError("mantissa and exponent must be integers")
        self._m, self._e = _strip(mantissa, exponent)
        self._hash = None

    @classmethod
    def _raw(cls, m: int, e: int) -> "DyadicRational":
        obj = object.__new__(cls)
        obj._m, obj._e = _strip(m, e)
        obj._hash = None
        return obj

    @classmethod
    def from_value(cls, x) -> "DyadicRational":
        if isinstance(x, DyadicRational):
            return x
        if isinstance(x, bool):
            x = int(x)
        if isinstance(x, int):
            return cls._raw(x, 0)
        if isinstance(x, str):
            x = parse_rational(x)
        if isinstance(x, float):
            x = Fraction(x)
        if isinstance(x, numbers.Rational):
            num, den = x.numerator, x.denominator
            if den & (den - 1):
                raise DomainError(f"{x} is not a dyadic rational")
            return cls._raw(num, den.bit_length() - 1)
        raise DomainError(f"cannot interpret {x!r} as a dyadic rational")

    # --- basic accessors -------------------------------------------------
    @property
    def mantissa(self) -> int:
        return self._m

    @property
    def exponent(self) -> int:
        return self._e

    @property
    def numerator(self) -> int:
        return self._m

    @property
    def denominator(self) -> int:
        return 1 << self._e

    def to_fraction(self) -> Fraction:
        return Fraction(self._m, 1 << self._e)

    def scale2(self, k: int) -> "DyadicRational":
        """Return ``self * 2**k`` exactly."""
        return DyadicRational._raw(self._m, self._e - k)

    def is_integer(self) -> bool:
        return self._e == 0

    def log2_exact(self) -> int | None:
        """Return k if ``self == 2**k``, else None."""
        m = self._m
        if m <= 0 or m & (m - 1):
            return None
        return (m.bit_length() - 1) - self._e

    def __repr__(self):
        return f"DyadicRational({self._m}, {self._e})"

    def __str__(self):
        return str(self._m) if self._e == 0 else f"{self._m}/{1 << self._e}"

    def __float__(self):
        return self._m / (1 << self._e) if self._e < 1000 else float(self.to_fraction())

    def __bool__(self):
        return self._m != 0

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash(self._m) if self._e == 0 else hash(Fraction(self._m, 1 << self._e))
            self._hash = h
        return h

    def __reduce__(self):
        return (DyadicRational, (self._m, self._e))

    # --- arithmetic ------------------------------------------------------
    def _pair(self, other):
        """Common-exponent mantissas, or None if ``other`` is not dyadic-compatible."""
        if isinstance(other, DyadicRational):
            om, oe = other._m, other._e
        elif isinstance(other, int):
            om, oe = other, 0
        else:
            return None
        e = self._e
        if e == oe:
            return self._m, om, e
        if e > oe:
            return self._m, om << (e - oe), e
        return self._m << (oe - e), om, oe

    def __add__(self, other):
        p = self._pair(other)
        if p is None:
            return self.to_fraction() + other if isinstance(other, (Fraction, float)) else NotImplemented
        return DyadicRational._raw(p[0] + p[1], p[2])

    __radd__ = __add__

    def __sub__(self, other):
        p = self._pair(other)
        if p is None:
            return self.to_fraction() - other if isinstance(other, (Fraction, float)) else NotImplemented
        return DyadicRational._raw(p[0] - p[1], p[2])

    def __rsub__(self, other):
        p = self._pair(other)
        if p is None:
            return other - self.to_fraction() if isinstance(other, (Fraction, float)) else NotImplemented
        return DyadicRational._raw(p[1] - p[0], p[2])

    def __mul__(self, other):
        if isinstance(other, DyadicRational):
            return DyadicRational._raw(self._m * other._m, self._e + other._e)
        if isinstance(other, int):
            return DyadicRational._raw(self._m * other, self._e)
        if isinstance(other, (Fraction, float)):
            return self.to_fraction() * other
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (DyadicRational, int)):
            o = other if isinstance(other, DyadicRational) else DyadicRational._raw(other, 0)
            if o._m == 0:
                raise ZeroDivisionError("division by zero")
            k = o.log2_exact() if o._m > 0 else (-o).log2_exact()
            if k is not None:
                r = self.scale2(-k)
                return r if o._m > 0 else -r
            return self.to_fraction() / o.to_fraction()
        if isinstance(other, (Fraction, float)):
            return self.to_fraction() / other
        return NotImplemented

    def __rtruediv__(self, other):
        if isinstance(other, int):
            return DyadicRational._raw(other, 0) / self
        if isinstance(other, (Fraction, float)):
            return other / self.to_fraction()
        return NotImplemented

    def __pow__(self, k):
        if isinstance(k, int) and k >= 0:
            return DyadicRational._raw(self._m ** k, self._e * k)
        return self.to_fraction() ** k

    def __neg__(self):
        return DyadicRational._raw(-self._m, self._e)

    def __pos__(self):
        return self

    def __abs__(self):
        return self if self._m >= 0 else -self

    def __floor__(self):
        return self._m >> self._e

    def __ceil__(self):
        return -((-self._m) >> self._e)

    def __trunc__(self):
        return self.__floor__() if self._m >= 0 else self.__ceil__()

    # --- comparison ------------------------------------------------------
    def _cmp(self, other):
        p = self._pair(other)
        if p is not None:
            return (p[0] > p[1]) - (p[0] < p[1])
        if isinstance(other, (Fraction, float)):
            a = self.to_fraction()
            return (a > other) - (a < other)
        return None

    def __eq__(self, other):
        if isinstance(other, DyadicRational):
            return self._m == other._m and self._e == other._e
        c = self._cmp(other)
        return NotImplemented if c is None else c == 0

    def __lt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c <= 0

    def __gt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c >= 0


numbers.Rational.register(DyadicRational)


def is_dyadic(x) -> bool:
    if isinstance(x, (DyadicRational, int)):
        return True
    x = as_fraction(x)
    d = x.denominator
    return not d & (d - 1)


def as_dyadic(x) -> DyadicRational:
    return DyadicRational.from_value(x)


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, DyadicRational):
        return x.to_fraction()
    if isinstance(x, str):
        return parse_rational(x)
    return Fraction(x)


def parse_rational(text: str) -> Fraction:
    """Parse ``"a/b"``, an integer or a finite decimal literal exactly."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise DomainError(f"not a rational number: {text!r}") from exc


def fmt_rational(x) -> str:
    """Serialize an exact number as ``"num/den"`` (or ``"num"`` for integers)."""
    f = as_fraction(x)
    return str(f.numerator) if f.denominator == 1 else f"{f.numerator}/{f.denominator}"
