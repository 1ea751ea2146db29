"""λ-oscillation with optimal witness sets, linkage, and the dominating family.

On a grid a cube ``Q`` is a union of cells of equal measure, so a set of
measure at least ``(1-λ)|Q|`` is any set of at least ``c = ceil((1-λ) #cells)``
cells, and the optimal set is a window of ``c`` consecutive sorted values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .carleson import carleson_constant
from .dyadic import as_fraction, fmt_rational
from .errors import AlignmentError, DomainError, SupportMarginError
from .forest import CubeFamily
from .grid import GridFunction
from .lattice import TruncatedLattice
from .stopping import augment_stop

__all__ = [
    "OscillationWitness",
    "oscillation",
    "lambda_oscillation",
    "linked",
    "WitnessCache",
    "linkage_predicate",
    "base_chain",
    "build_oscillation_family",
    "check_pointwise_bound",
]


@dataclass(frozen=True)
class OscillationWitness:
    cube: object
    mask: int  # bit i set <=> global cell i (row-major) is in the witness
    count: int
    lo: float
    hi: float

    @property
    def value(self) -> float:
        return self.hi - self.lo

    @property
    def value_exact(self) -> Fraction:
        return Fraction(self.hi) - Fraction(self.lo)

    def cells(self) -> list:
        m, out, i = self.mask, [], 0
        while m:
            if m & 1:
                out.append(i)
            m >>= 1
            i += 1
        return out


def oscillation(values) -> float:
    v = np.asarray(values, dtype=np.float64)
    return float(v.max() - v.min()) if v.size else 0.0


def _window_count(ncells: int, lam: Fraction) -> int:
    return math.ceil((1 - lam) * ncells)


def _min_window(v: np.ndarray, c: int):
    """Sorted order and start of the leftmost narrowest window of ``c`` sorted values."""
    order = np.argsort(v, kind="stable")
    s = v[order]
    w = s[c - 1:] - s[: s.size - c + 1]
    best = w.min()
    scale = max(float(np.abs(s).max()), 1e-300)
    cand = np.nonzero(w <= best + 8 * np.finfo(float).eps * scale)[0]
    if cand.size == 1:
        return order, s, int(cand[0])
    exact = [(Fraction(float(s[i + c - 1])) - Fraction(float(s[i])), int(i)) for i in cand]
    return order, s, min(exact)[1]


def min_window_value(values, lam) -> Fraction:
    """Exact λ-oscillation of equally weighted values (for tests and oracles)."""
    v = np.asarray(values, dtype=np.float64).ravel()
    c = _window_count(v.size, as_fraction(lam))
    _, s, i = _min_window(v, c)
    return Fraction(float(s[i + c - 1])) - Fraction(float(s[i]))


def _bits(idx: np.ndarray, total: int) -> int:
    b = np.zeros(total, dtype=bool)
    b[idx] = True
    return int.from_bytes(np.packbits(b, bitorder="little").tobytes(), "little")


def lambda_oscillation(f: GridFunction, Q, lam) -> OscillationWitness:
    lam = as_fraction(lam)
    if not 0 < lam < 1:
        raise DomainError("lambda must lie in (0, 1)")
    sl = f.aligned_slices(Q)
    if sl is None or sl == () or tuple(s.stop - s.start for s in sl) != (int(as_fraction(Q.side) / f.cell_side),) * f.dim:
        raise AlignmentError(f"{Q!r} is not a union of whole cells of the grid")
    flat = np.arange(f.values.size).reshape(f.values.shape)[sl].ravel()
    v = f.values[sl].ravel()
    c = _window_count(v.size, lam)
    order, s, i = _min_window(v, c)
    lo, hi = float(s[i]), float(s[i + c - 1])
    a = int(np.searchsorted(s, lo, side="left"))
    b = int(np.searchsorted(s, hi, side="right"))
    # every cell valued inside the optimal window; same value, largest witness
    keep = order[a:b]
    return OscillationWitness(Q, _bits(flat[keep], f.values.size), int(keep.size), lo, hi)


class WitnessCache:
    """Memoised witnesses for one function and one λ."""

    def __init__(self, f: GridFunction, lam):
        self.f = f
        self.lam = as_fraction(lam)
        self._w = {}

    def __call__(self, Q) -> OscillationWitness:
        w = self._w.get(Q)
        if w is None:
            w = lambda_oscillation(self.f, Q, self.lam)
            self._w[Q] = w
        return w

    def linked(self, Q, Q2) -> bool:
        return (self(Q).mask & self(Q2).mask) != 0


def linked(f: GridFunction, Q, Q2, lam, cache: WitnessCache | None = None) -> bool:
    cache = cache or WitnessCache(f, lam)
    return cache.linked(Q, Q2)


def linkage_predicate(cache: WitnessCache, universe: TruncatedLattice):
    """``P(Q, Q2)``: every child of ``Q2`` is linked to ``Q`` (vacuous at the bottom)."""
    bottom = universe.side_at(universe.depth)
    lat = universe.lattice

    def P(Q, Q2) -> bool:
        if Q2.side == bottom:
            return True
        return all(cache.linked(Q, C) for C in lat.children(Q2))

    return P


def base_chain(universe: TruncatedLattice, anchor=None) -> CubeFamily:
    """Universe cubes containing the anchor cell (default: the cell at the top's centre)."""
    if anchor is None:
        anchor = universe.top.center
    cubes = [Q for Q in universe.cubes() if Q.contains_point(anchor)]
    return CubeFamily(cubes, universe.lattice, validate=False)


def build_oscillation_family(f: GridFunction, lam, universe: TruncatedLattice | None = None, anchor=None):
    """Construct a 6-Carleson family dominating ``|f|`` by ``Σ ω_λ(f;Q) χ_Q``.

    Returns ``(S, report, cache)``; the report includes the exact Carleson
    constant and the cellwise domination check.
    """
    lam = as_fraction(lam)
    n = f.dim
    if not 0 < lam <= Fraction(1, 1 << (n + 2)):
        raise DomainError(f"lambda must lie in (0, 2^-(n+2)], got {lam}")
    universe = universe or TruncatedLattice(f.top, f.depth)
    if universe.top != f.top or universe.depth != f.depth:
        raise AlignmentError("universe must be the truncation matching the grid")
    supp = f.support_measure()
    if supp > lam * as_fraction(f.top.volume):
        raise SupportMarginError(
            f"|{{f != 0}}| = {supp} exceeds lambda |top| = {lam * as_fraction(f.top.volume)}",
            support=str(supp),
        )
    cache = WitnessCache(f, lam)
    P = linkage_predicate(cache, universe)
    S = augment_stop(base_chain(universe, anchor), P, universe)
    lam_S = carleson_constant(S)
    point = check_pointwise_bound(f, S, cache, universe)
    report = {
        "check": "oscillation_family",
        "scope": {"dim": n, "depth": f.depth, "lambda": fmt_rational(lam), "cubes": len(S)},
        "exact": {"carleson": fmt_rational(lam_S), "bound": "6"},
        "numeric": {"max_ratio": point["max_ratio"]},
        "passed": lam_S <= 6 and point["passed"],
        "carleson_ok": lam_S <= 6,
        "pointwise_ok": point["passed"],
        "counterexample": point["counterexample"] if not point["passed"] else (None if lam_S <= 6 else {"carleson": fmt_rational(lam_S)}),
    }
    return S, report, cache


def check_pointwise_bound(f: GridFunction, S: CubeFamily, cache: WitnessCache, universe: TruncatedLattice) -> dict:
    """Exact check of ``|f(x)| <= Σ_{Q ∈ S, Q ∋ x} ω_λ(f;Q)`` at every cell."""
    acc = {}
    lat = universe.lattice
    zero = Fraction(0)
    total = np.zeros(f.values.shape, dtype=object)
    for i in range(universe.depth + 1):
        for Q in universe.level(i):
            base = acc[lat.parent(Q)] if i else zero
            acc[Q] = base + cache(Q).value_exact if Q in S else base
    N = f.n_per_axis
    fail = None
    worst = 0.0
    for Q in universe.level(universe.depth):
        idx = universe.offset(Q)[1]
        total[idx] = acc[Q]
    for idx in np.ndindex(f.values.shape):
        lhs = Fraction(abs(float(f.values[idx])))
        rhs = total[idx]
        if lhs > rhs:
            fail = {"cell": list(idx), "abs_f": float(lhs), "sum": float(rhs)}
            break
        if rhs > 0:
            worst = max(worst, float(lhs / rhs))
    return {"passed": fail is None, "max_ratio": worst, "counterexample": fail, "cells": N ** f.dim}
