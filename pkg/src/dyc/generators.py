"""Seeded random instances shared by the acceptance suite, the tests and the CLI."""

from __future__ import annotations

import hashlib
from fractions import Fraction

import numpy as np

from .cube import Cube, RationalCube
from .forest import CubeFamily
from .grid import GridFunction, generate
from .lattice import CANONICAL, TruncatedLattice


def random_family(rng: np.random.Generator, universe: TruncatedLattice, style: str | None = None, max_cubes: int = 500) -> CubeFamily:
    """A non-empty random subfamily of the universe.

    Styles: ``iid`` keeps each cube with one random probability, ``paths``
    keeps a few random root-to-bottom chains with holes, ``layered`` keeps a
    random subset of generations.
    """
    style = style or ["iid", "paths", "layered"][int(rng.integers(3))]
    cubes = universe.cubes()
    if style == "iid":
        keep = rng.random(len(cubes)) < rng.uniform(0.05, 0.6)
        chosen = [Q for Q, k in zip(cubes, keep) if k]
    elif style == "paths":
        chosen = set()
        lat = universe.lattice
        for _ in range(int(rng.integers(1, 6))):
            Q = universe.top
            hole = rng.uniform(0.0, 0.5)
            for _ in range(universe.depth + 1):
                if rng.random() >= hole:
                    chosen.add(Q)
                ch = lat.children(Q)
                if Q.side == universe.side_at(universe.depth):
                    break
                Q = ch[int(rng.integers(len(ch)))]
        chosen = sorted(chosen, key=lambda c: c.sort_key())
    elif style == "layered":
        gens = [i for i in range(universe.depth + 1) if rng.random() < 0.5]
        chosen = [Q for i in gens for Q in universe.level(i) if rng.random() < 0.8]
    else:
        raise ValueError(f"unknown style {style!r}")
    if not chosen:
        chosen = [cubes[int(rng.integers(len(cubes)))]]
    if len(chosen) > max_cubes:
        idx = np.sort(rng.choice(len(chosen), size=max_cubes, replace=False))
        chosen = [chosen[i] for i in idx]
    return CubeFamily(chosen, universe.lattice, validate=False)


def random_universe(rng: np.random.Generator, dim: int, depth: int) -> TruncatedLattice:
    """A truncation whose top is a random canonical cube of side between 1/4 and 4."""
    k = int(rng.integers(-2, 3))
    point = tuple(Fraction(int(rng.integers(-8, 8)), 4) for _ in range(dim))
    return TruncatedLattice(CANONICAL.cube_at(point, k), depth)


def _key(*parts) -> float:
    h = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(h, "little") / 2 ** 64


def random_predicate(seed: int, fail_rate: float):
    """A deterministic pseudo-random stopping predicate with ``P(Q, Q) = True``."""

    def P(Q, Q2) -> bool:
        return Q == Q2 or _key(seed, Q.compact(), Q2.compact()) >= fail_rate

    return P


def random_rational_cubes(rng: np.random.Generator, m: int, dim: int) -> list:
    """``m`` cubes with random rational corners (denominators up to 12) and sides."""
    out = []
    for _ in range(m):
        side = Fraction(int(rng.integers(1, 24)), int(rng.integers(1, 12)))
        corner = [Fraction(int(rng.integers(-40, 40)), int(rng.integers(1, 12))) for _ in range(dim)]
        out.append(RationalCube(corner, side))
    return out


def spike_mixture(rng: np.random.Generator, top: Cube, depth: int, margin: int) -> GridFunction:
    """Spikes plus indicators on a random subcube ``margin`` generations down, zero elsewhere."""
    n = top.dim
    u = rng.integers(0, 1 << margin, size=n)
    side = top.side / (1 << margin)
    sub = Cube([c + side * int(a) for c, a in zip(top.corner, u)], side)
    d = depth - margin
    v = np.zeros((1 << d,) * n)
    for _ in range(int(rng.integers(1, 4))):
        kind = rng.random()
        if kind < 0.5:
            g = generate("spike", sub, d, rng, alpha=float(rng.uniform(-0.6, 1.0)))
            v += float(rng.uniform(-1, 1)) * g.values
        else:
            g = generate("indicator", sub, d, rng, pieces=int(rng.integers(1, 4)), min_gen=0, max_gen=d)
            v += float(rng.choice([-1.0, 1.0])) * g.values
    return GridFunction(sub, d, v).embed(top, depth)


def positive_weight(rng: np.random.Generator, top: Cube, depth: int) -> GridFunction:
    """A positive weight: smooth exponential or a power-law spike (possibly singular)."""
    if rng.random() < 0.5:
        return generate("positive", top, depth, rng)
    return generate("spike", top, depth, rng, alpha=float(rng.uniform(-0.8, 1.5)))


def nonneg_function(rng: np.random.Generator, top: Cube, depth: int) -> GridFunction:
    kind = rng.random()
    if kind < 0.4:
        return generate("indicator", top, depth, rng, pieces=int(rng.integers(1, 5)), min_gen=0, max_gen=depth)
    if kind < 0.7:
        return generate("spike", top, depth, rng, alpha=float(rng.uniform(-0.8, 1.0)))
    return generate("smooth", top, depth, rng).abs()
