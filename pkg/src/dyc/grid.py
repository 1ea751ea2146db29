"""Piecewise-constant functions on the regular subdivision of a top cube.

Geometry (cell overlaps, volumes) is exact; values are float64 and sums use
``math.fsum``.  Outside the top cube the function is zero.
"""

from __future__ import annotations

import math
from fractions import Fraction
from itertools import product

import numpy as np

from .cube import Cube, _BaseCube, cube_from_json
from .dyadic import as_fraction
from .errors import AlignmentError, DomainError

__all__ = ["GridFunction", "weighted_measure", "weighted_integral", "generate"]


class GridFunction:
    __slots__ = ("top", "depth", "values", "_corner_f", "_h")

    def __init__(self, top: Cube, depth: int, values):
        values = np.asarray(values, dtype=np.float64)
        n = top.dim
        N = 1 << depth
        if values.size != N ** n:
            raise DomainError(f"expected {N ** n} values, got {values.size}")
        self.top = top
        self.depth = int(depth)
        self.values = values.reshape((N,) * n)
        self.values.setflags(write=False)
        self._corner_f = tuple(as_fraction(c) for c in top.corner)
        self._h = as_fraction(top.side) / N

    # --- construction ----------------------------------------------------
    @classmethod
    def constant(cls, top: Cube, depth: int, c: float = 0.0) -> "GridFunction":
        return cls(top, depth, np.full((1 << depth,) * top.dim, float(c)))

    @classmethod
    def from_function(cls, top: Cube, depth: int, fn) -> "GridFunction":
        """Sample ``fn`` (taking a tuple of float coordinates) at cell centres."""
        g = cls.constant(top, depth)
        vals = np.array([fn(g.cell_center(idx)) for idx in g.indices()], dtype=np.float64)
        return cls(top, depth, vals)

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.top, self.depth, values)

    # --- shape -----------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.top.dim

    @property
    def n_per_axis(self) -> int:
        return 1 << self.depth

    @property
    def cell_side(self) -> Fraction:
        return self._h

    @property
    def cell_volume(self) -> Fraction:
        return self._h ** self.dim

    def indices(self):
        return product(range(self.n_per_axis), repeat=self.dim)

    def cell_cube(self, idx) -> Cube:
        return Cube(tuple(c + self._h * i for c, i in zip(self._corner_f, idx)), self._h)

    def cell_center(self, idx) -> tuple:
        return tuple(float(c + self._h * (Fraction(2 * i + 1, 2))) for c, i in zip(self._corner_f, idx))

    def cell_of_point(self, p):
        idx = []
        for c, x in zip(self._corner_f, p):
            t = math.floor((as_fraction(x) - c) / self._h)
            if not 0 <= t < self.n_per_axis:
                return None
            idx.append(t)
        return tuple(idx)

    def same_grid(self, other) -> bool:
        return self.top == other.top and self.depth == other.depth

    def _check(self, other):
        if not self.same_grid(other):
            raise DomainError("grid functions live on different grids")

    # --- exact geometry of boxes ----------------------------------------
    def aligned_slices(self, Q):
        """Index slices of the cells covered by ``Q ∩ top`` if ``Q`` is cell-aligned, else None.

        Returns ``()`` (an empty tuple) when ``Q`` misses the top cube.
        """
        sl = []
        h = self._h
        N = self.n_per_axis
        s = as_fraction(Q.side) / h
        if s.denominator != 1:
            return None
        s = int(s)
        empty = False
        for c, q in zip(self._corner_f, Q.corner):
            a = (as_fraction(q) - c) / h
            if a.denominator != 1:
                return None
            a = int(a)
            lo, hi = max(a, 0), min(a + s, N)
            if hi <= lo:
                empty = True
            sl.append(slice(lo, hi))
        return () if empty else tuple(sl)

    def slices_of(self, Q) -> tuple:
        """Like :meth:`aligned_slices` but raising ``AlignmentError`` for unaligned cubes."""
        sl = self.aligned_slices(Q)
        if sl is None:
            raise AlignmentError(f"{Q!r} is not aligned with the grid cells")
        return sl

    def _axis_weights(self, lo: Fraction, hi: Fraction, c: Fraction):
        """Cell index range and exact overlap lengths of ``[lo, hi)`` along one axis."""
        h = self._h
        N = self.n_per_axis
        i0 = max(math.floor((lo - c) / h), 0)
        i1 = min(math.ceil((hi - c) / h), N)
        w = []
        for i in range(i0, i1):
            a = max(lo, c + h * i)
            b = min(hi, c + h * (i + 1))
            w.append(b - a if b > a else Fraction(0))
        return i0, i1, w

    def integral(self, Q) -> float:
        """Integral over ``Q`` of the zero-extended function."""
        sl = self.aligned_slices(Q)
        if sl is not None:
            if sl == ():
                return 0.0
            return math.fsum(self.values[sl].ravel()) * float(self.cell_volume)
        ranges, weights = [], []
        s = as_fraction(Q.side)
        for c, q in zip(self._corner_f, Q.corner):
            q = as_fraction(q)
            i0, i1, w = self._axis_weights(q, q + s, c)
            if i1 <= i0:
                return 0.0
            ranges.append(slice(i0, i1))
            weights.append(np.array([float(x) for x in w]))
        block = self.values[tuple(ranges)]
        wt = weights[0]
        for w in weights[1:]:
            wt = np.multiply.outer(wt, w)
        return math.fsum((block * wt).ravel())

    def average(self, Q) -> float:
        return self.integral(Q) / float(as_fraction(Q.volume))

    def abs_average(self, Q) -> float:
        return self.abs().average(Q)

    def mask(self, Q) -> np.ndarray:
        """Boolean mask of cells inside an aligned cube ``Q``."""
        m = np.zeros(self.values.shape, dtype=bool)
        sl = self.slices_of(Q)
        if sl:
            m[sl] = True
        return m

    # --- pointwise operations -------------------------------------------
    def abs(self) -> "GridFunction":
        return self.with_values(np.abs(self.values))

    def __add__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return self.with_values(self.values + other.values)
        return self.with_values(self.values + other)

    def __mul__(self, other):
        if isinstance(other, GridFunction):
            self._check(other)
            return self.with_values(self.values * other.values)
        return self.with_values(self.values * other)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def __pow__(self, p):
        return self.with_values(self.values ** p)

    def refine(self, k: int = 1) -> "GridFunction":
        v = self.values
        for ax in range(self.dim):
            v = np.repeat(v, 1 << k, axis=ax)
        return GridFunction(self.top, self.depth + k, v)

    def embed(self, top: Cube, depth: int | None = None) -> "GridFunction":
        """Zero-extend onto a larger aligned top cube with the same cell size."""
        a = as_fraction(top.side) / self._h
        if a.denominator != 1 or a.numerator & (a.numerator - 1):
            raise AlignmentError("new top is not a power-of-two multiple of the cell size")
        D = a.numerator.bit_length() - 1
        if depth is not None and depth != D:
            raise AlignmentError("requested depth does not match the cell size")
        out = GridFunction.constant(top, D)
        sl = out.slices_of(self.top)
        if not sl or tuple(s.stop - s.start for s in sl) != self.values.shape:
            raise AlignmentError("old top is not contained in the new top")
        v = np.zeros(out.values.shape)
        v[sl] = self.values
        return GridFunction(top, D, v)

    def support_measure(self) -> Fraction:
        return int(np.count_nonzero(self.values)) * self.cell_volume

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    def lp_norm(self, p, w: "GridFunction | None" = None) -> float:
        """``||f||_{L^p(w)}``; ``p = inf`` is the max over cells with positive weight."""
        a = np.abs(self.values)
        if w is not None:
            self._check(w)
        if p == math.inf:
            if w is None:
                return float(a.max()) if a.size else 0.0
            pos = w.values > 0
            return float(a[pos].max()) if pos.any() else 0.0
        p = float(p)
        terms = a ** p * (w.values if w is not None else 1.0)
        return (math.fsum(np.ravel(terms)) * float(self.cell_volume)) ** (1.0 / p)

    # --- serialisation ---------------------------------------------------
    def to_json(self) -> dict:
        return {"top": self.top.to_json(), "depth": self.depth, "values": [float(x) for x in self.values.ravel()]}

    @classmethod
    def from_json(cls, obj) -> "GridFunction":
        top = cube_from_json(obj["top"])
        return cls(top, int(obj["depth"]), np.array(obj["values"], dtype=np.float64))

    def __repr__(self):
        return f"GridFunction(top={self.top!r}, depth={self.depth})"


def _cell_mask(w: GridFunction, E) -> np.ndarray:
    if E is None:
        return np.ones(w.values.shape, dtype=bool)
    if isinstance(E, np.ndarray):
        if E.shape != w.values.shape:
            raise DomainError("cell mask has the wrong shape")
        return E.astype(bool)
    if isinstance(E, _BaseCube):
        return w.mask(E)
    m = np.zeros(w.values.shape, dtype=bool)
    for idx in E:
        m[tuple(idx)] = True
    return m


def weighted_measure(w: GridFunction, E=None) -> float:
    """``w(E)`` for a set of cells given as a mask, an aligned cube or index tuples."""
    m = _cell_mask(w, E)
    return math.fsum(w.values[m]) * float(w.cell_volume)


def weighted_integral(f: GridFunction, w: GridFunction, E=None) -> float:
    f._check(w)
    m = _cell_mask(w, E)
    return math.fsum((f.values * w.values)[m]) * float(w.cell_volume)


# --- random profiles ------------------------------------------------------

def _centers(top: Cube, depth: int) -> np.ndarray:
    N = 1 << depth
    h = float(top.side) / N
    axes = [float(c) + h * (np.arange(N) + 0.5) for c in top.corner]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def generate(profile: str, top: Cube, depth: int, rng: np.random.Generator, **params) -> GridFunction:
    """Random grid function of a named profile.

    ``indicator``: a sum of a few random aligned sub-cube indicators with random
    heights (``pieces``, ``min_gen``, ``max_gen`` relative to the top).
    ``spike``: ``dist(x, x0) ** alpha`` with a random cell-centre ``x0``
    (``alpha`` may be negative; the centre cell uses half a cell width).
    ``smooth``: a random trigonometric polynomial, sign-mixed.
    ``positive``: ``exp`` of a smooth sample, useful as a weight.
    """
    n = top.dim
    N = 1 << depth
    if profile == "indicator":
        pieces = int(params.get("pieces", 3))
        lo_g = int(params.get("min_gen", 1))
        hi_g = int(params.get("max_gen", depth))
        v = np.zeros((N,) * n)
        for _ in range(pieces):
            g = int(rng.integers(min(lo_g, depth), max(hi_g, lo_g) + 1))
            g = min(g, depth)
            w = N >> g
            u = rng.integers(0, 1 << g, size=n)
            sl = tuple(slice(int(a) * w, (int(a) + 1) * w) for a in u)
            v[sl] += float(rng.uniform(params.get("low", 0.2), params.get("high", 1.0)))
        return GridFunction(top, depth, v)
    if profile == "spike":
        alpha = float(params.get("alpha", 0.5))
        X = _centers(top, depth)
        i0 = tuple(int(a) for a in rng.integers(0, N, size=n))
        x0 = X[i0]
        d = np.sqrt(((X - x0) ** 2).sum(axis=-1))
        d[i0] = 0.5 * float(top.side) / N
        return GridFunction(top, depth, d ** alpha)
    if profile in ("smooth", "positive"):
        X = _centers(top, depth)
        L = float(top.side)
        k = int(params.get("modes", 3))
        v = np.zeros((N,) * n)
        for _ in range(k):
            freq = rng.integers(1, 4, size=n)
            phase = rng.uniform(0, 2 * np.pi)
            amp = rng.normal()
            arg = sum(2 * np.pi * float(freq[i]) * (X[..., i] - float(top.corner[i])) / L for i in range(n))
            v += amp * np.cos(arg + phase)
        if profile == "positive":
            v = np.exp(float(params.get("scale", 1.0)) * v / max(1e-12, float(np.abs(v).max())))
        return GridFunction(top, depth, v)
    raise DomainError(f"unknown profile {profile!r}")
