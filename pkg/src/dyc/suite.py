"""The acceptance checks, shared by ``tests/test_acceptance.py`` and ``dyc suite``.

Every check takes a seed and returns a report.  Where a library routine is
under test the check compares it with an independent brute-force oracle
(plain containment geometry and enumeration) rather than with itself.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction

import numpy as np

from . import generators as gen
from .carleson import (
    carleson_constant,
    detect_stack,
    largest_feasible_eta,
    sparse_witness,
    split_family,
    verify_witness,
)
from .cube import Cube
from .domination import DecaySequence, dominate, make_kernel, summation_trick_check
from .dyadic import as_fraction, fmt_rational
from .forest import CubeFamily, house, lattice_distance, roof
from .grid import GridFunction, generate
from .lattice import CANONICAL, TruncatedLattice
from .oscillation import build_oscillation_family, lambda_oscillation
from .report import make_report, timer
from .rng import make_rng, resolve_seed
from .shifted import cover_cubes, verify_three_lattice
from .stopping import augment, stop
from .weighted import (
    ExponentProfile,
    constrained_weights,
    main_theorem_constant,
    muckenhoupt_norm,
    renormalize,
    verify_kbound,
    verify_main_theorem,
    verify_maximal_theorem,
)


def _first(fail, item):
    return fail if fail is not None else item


# --- brute-force oracles ---------------------------------------------------

def _strictly_between(S, big, small) -> list:
    return [P for P in S if P != big and P != small and big.contains(P) and P.contains(small)]


def brute_distance_nested(S, big, small) -> int:
    return 0 if big == small else 1 + len(_strictly_between(S, big, small))


def brute_forest_distance(S) -> dict:
    """All-pairs graph distances of the nesting graph by BFS over brute-force edges."""
    cubes = list(S)
    adj = {Q: [] for Q in cubes}
    for a in cubes:
        for b in cubes:
            if a != b and a.contains(b) and not _strictly_between(cubes, a, b):
                adj[a].append(b)
                adj[b].append(a)
    dist = {}
    for s in cubes:
        d = {s: 0}
        frontier = [s]
        while frontier:
            nxt = []
            for x in frontier:
                for y in adj[x]:
                    if y not in d:
                        d[y] = d[x] + 1
                        nxt.append(y)
            frontier = nxt
        dist[s] = d
    return dist


def brute_roof(S, R):
    cands = [P for P in S if P.contains(R)]
    return min(cands, key=lambda P: as_fraction(P.side)) if cands else None


def brute_stop(Q, P, universe_cubes) -> set:
    """Closure of one-step stopping cubes computed straight from the definition."""
    reached = {Q}
    frontier = [Q]
    while frontier:
        nxt = []
        for R in frontier:
            below = [C for C in universe_cubes if C != R and R.contains(C)]
            for C in below:
                if P(R, C):
                    continue
                mids = [B for B in below if B != C and B.contains(C)]
                if all(P(R, B) for B in mids) and C not in reached:
                    reached.add(C)
                    nxt.append(C)
        frontier = nxt
    return reached


# --- 1: three lattices -----------------------------------------------------

def check_01_three_lattice(seed=None) -> dict:
    seed = resolve_seed(seed)
    with timer() as t:
        results = []
        for dim, depth in ((1, 6), (2, 5)):
            top = CANONICAL.cube_at((Fraction(-1, 3),) * dim, -2)
            results.append(verify_three_lattice(TruncatedLattice(top, depth)))
        passed = all(r["passed"] for r in results)
        fail = next((r["counterexample"] for r in results if not r["passed"]), None)
    return make_report(
        "01_three_lattice",
        scope={"configs": [{"dim": 1, "depth": 6}, {"dim": 2, "depth": 5}]},
        exact={"classes": [r["classes"] for r in results], "expected": [r["expected_classes"] for r in results]},
        passed=passed, counterexample=fail, seed=seed, runtime_ms=t["ms"],
    )


# --- 2: covering by iterated triples ---------------------------------------

def check_02_cover_cubes(seed=None, instances: int = 100) -> dict:
    seed = resolve_seed(seed)
    fail = None
    worst = Fraction(0)
    with timer() as t:
        for k in range(instances):
            rng = make_rng(seed, "cover", k)
            m = int(rng.integers(1, 4))
            n = int(rng.integers(1, 3))
            cubes = gen.random_rational_cubes(rng, m, n)
            d, covers = cover_cubes(cubes)
            bound = 3 ** (m * n)
            for Q, C in zip(cubes, covers):
                ratio = as_fraction(C.volume) / as_fraction(Q.volume)
                worst = max(worst, ratio)
                ok = C.contains(Q) and d.is_member(C) and ratio <= bound
                if not ok:
                    fail = _first(fail, {"instance": k, "cube": Q.to_json(), "cover": C.to_json(), "ratio": fmt_rational(ratio), "bound": bound})
    return make_report("02_cover_cubes", scope={"instances": instances, "m_max": 3, "n_max": 2},
                       exact={"max_ratio_observed": fmt_rational(worst)}, passed=fail is None,
                       counterexample=fail, seed=seed, runtime_ms=t["ms"])


# --- 3: forest properties 1, 5, 6 ------------------------------------------

def _forest_props(S: CubeFamily, universe: TruncatedLattice, ucubes, dist=None):
    """Return the first violation of properties 1, 5 or 6, or None."""
    F = S.forest()
    cubes = list(S)
    for Q in cubes:
        for Q2 in cubes:
            if Q.contains(Q2):
                expect = brute_distance_nested(cubes, Q, Q2)
                got = F.distance(Q, Q2)
                if got != expect:
                    return {"property": 1, "pair": [Q.compact(), Q2.compact()], "distance": got, "expected": expect}
    if dist is not None:
        for a in cubes:
            for b in cubes:
                want = dist[a].get(b, math.inf)
                if F.distance(a, b) != want:
                    return {"property": "graph_distance", "pair": [a.compact(), b.compact()]}
    for Q in cubes:
        H = house(S, Q, universe)
        if sorted(H, key=lambda c: c.sort_key()) != sorted((R for R in ucubes if brute_roof(cubes, R) == Q), key=lambda c: c.sort_key()):
            return {"property": "house", "cube": Q.compact()}
        for R in H:
            for Q2 in cubes:
                if R.contains(Q2) and lattice_distance(R, Q2) < F.distance(Q, Q2):
                    return {"property": 5, "Q": Q.compact(), "R": R.compact(), "Q2": Q2.compact()}
        layers = {}
        for Q2 in cubes:
            if Q.contains(Q2):
                layers.setdefault(F.distance(Q, Q2), []).append(Q2)
        for lay in layers.values():
            for a, b in itertools.combinations(lay, 2):
                if a.intersects(b):
                    return {"property": 6, "Q": Q.compact(), "pair": [a.compact(), b.compact()]}
    return None


class _MaskOracle:
    """Bitmask brute force for all subfamilies of one small universe.

    Containment is precomputed once from geometry; per family, distances are
    counts of intermediate members and roofs are the first member on the
    upward chain found by scanning all containing cubes.
    """

    def __init__(self, universe: TruncatedLattice):
        self.universe = universe
        ucubes = universe.cubes()
        self.cubes = ucubes
        N = len(ucubes)
        self.contains = [[a.contains(b) for b in ucubes] for a in ucubes]
        self.between = [[sum(1 << k for k in range(N) if k not in (i, j) and self.contains[i][k] and self.contains[k][j])
                         for j in range(N)] for i in range(N)]
        self.above = [sorted((k for k in range(N) if self.contains[k][j]), key=lambda k: as_fraction(ucubes[k].side))
                      for j in range(N)]
        self.gen = [lattice_distance(ucubes[0], Q) for Q in ucubes]

    def check(self, mask: int):
        N = len(self.cubes)
        members = [i for i in range(N) if mask >> i & 1]
        S = CubeFamily([self.cubes[i] for i in members], validate=False)
        F = S.forest()
        C = self.cubes
        dist = {}
        for i in members:
            for j in members:
                if self.contains[i][j]:
                    d = 0 if i == j else 1 + bin(mask & self.between[i][j]).count("1")
                    dist[i, j] = d
                    if F.distance(C[i], C[j]) != d:
                        return {"property": 1, "pair": [C[i].compact(), C[j].compact()]}
        roofs = {}
        for r in range(N):
            roofs[r] = next((k for k in self.above[r] if mask >> k & 1), None)
        for q in members:
            want = sorted(r for r in range(N) if roofs[r] == q)
            got = sorted(C.index(R) for R in house(S, C[q], self.universe))
            if got != want:
                return {"property": "house", "cube": C[q].compact()}
            for r in want:
                for j in members:
                    if self.contains[r][j] and self.gen[j] - self.gen[r] < dist[q, j]:
                        return {"property": 5, "Q": C[q].compact(), "R": C[r].compact(), "Q2": C[j].compact()}
            layers = {}
            for j in members:
                if self.contains[q][j]:
                    layers.setdefault(dist[q, j], []).append(j)
            for lay in layers.values():
                for a, b in itertools.combinations(lay, 2):
                    if self.contains[a][b] or self.contains[b][a]:
                        return {"property": 6, "Q": C[q].compact(), "pair": [C[a].compact(), C[b].compact()]}
        return None


def check_03_forest(seed=None, random_instances: int = 200) -> dict:
    seed = resolve_seed(seed)
    fail = None
    with timer() as t:
        U = TruncatedLattice(Cube([0], 1), 3)
        oracle = _MaskOracle(U)
        count = 0
        for mask in range(1, 1 << len(oracle.cubes)):
            v = oracle.check(mask)
            count += 1
            if v is not None:
                fail = _first(fail, {"mask": mask, **v})
                break
        for k in range(random_instances):
            rng = make_rng(seed, "forest", k)
            dim = 1 if k % 4 else 2
            U5 = gen.random_universe(rng, dim, 5 if dim == 1 else 3)
            S = gen.random_family(rng, U5, max_cubes=120)
            v = _forest_props(S, U5, U5.cubes(), brute_forest_distance(S))
            if v is None:
                F = S.forest()
                if len(F.edges) != len(S) - len(F.components):
                    v = {"property": "acyclic"}
            if v is not None:
                fail = _first(fail, {"instance": k, **v})
    return make_report("03_forest", scope={"exhaustive_families": count, "random_families": random_instances},
                       passed=fail is None, counterexample=fail, seed=seed, runtime_ms=t["ms"])


# --- 4: stopping engine ----------------------------------------------------

def check_04_stopping(seed=None, predicates: int = 20) -> dict:
    seed = resolve_seed(seed)
    fail = None
    checked = 0
    with timer() as t:
        for k in range(predicates):
            rng = make_rng(seed, "stop", k)
            dim, depth = (1, 4) if k % 2 == 0 else (2, 3)
            U = gen.random_universe(rng, dim, depth)
            ucubes = U.cubes()
            P = gen.random_predicate(seed * 1000 + k, float(rng.uniform(0.05, 0.6)))
            stops = {Q: stop(Q, P, U) for Q in ucubes}
            for Q in ucubes:
                S = stops[Q]
                if S.as_set() != brute_stop(Q, P, ucubes):
                    fail = _first(fail, {"predicate": k, "cube": Q.compact(), "issue": "definition"})
                for R in ucubes:
                    if Q.contains(R):
                        rf = roof(S, R)
                        if rf is None or not P(rf, R):
                            fail = _first(fail, {"predicate": k, "cube": Q.compact(), "R": R.compact(), "issue": "roof"})
                for Q2 in S:
                    inside = {C for C in S if Q2.contains(C)}
                    if inside != stops[Q2].as_set():
                        fail = _first(fail, {"predicate": k, "cube": Q.compact(), "sub": Q2.compact(), "issue": "self_similarity"})
                checked += 1
    return make_report("04_stopping", scope={"predicates": predicates, "stops_checked": checked},
                       passed=fail is None, counterexample=fail, seed=seed, runtime_ms=t["ms"])


# --- 5: Carleson to sparse --------------------------------------------------

def _random_config(rng):
    r = rng.random()
    if r < 0.6:
        return 1, int(rng.integers(2, 9))
    if r < 0.9:
        return 2, int(rng.integers(1, 5))
    return 3, int(rng.integers(1, 3))


def _independent_witness_check(S, W) -> dict | None:
    pieces = []
    for Q in S:
        cs = W.cubes(Q)
        if any(not Q.contains(C) for C in cs):
            return {"issue": "containment", "cube": Q.compact()}
        mass = sum((as_fraction(C.volume) for C in cs), Fraction(0))
        if mass < W.eta * as_fraction(Q.volume):
            return {"issue": "measure", "cube": Q.compact()}
        pieces.extend(cs)
    pieces.sort(key=lambda c: tuple(as_fraction(x) for x in c.corner))
    seen = set()
    for C in pieces:
        key = (C.corner, C.side)
        if key in seen:
            return {"issue": "disjointness", "cube": C.compact()}
        seen.add(key)
    for a, b in itertools.combinations(pieces, 2) if len(pieces) < 300 else ():
        if a.intersects(b):
            return {"issue": "disjointness", "cubes": [a.compact(), b.compact()]}
    return None


def check_05_sparse(seed=None, instances: int = 200) -> dict:
    seed = resolve_seed(seed)
    fail = None
    gaps = []
    with timer() as t:
        for k in range(instances):
            rng = make_rng(seed, "sparse", k)
            dim, depth = _random_config(rng)
            U = gen.random_universe(rng, dim, depth)
            S = gen.random_family(rng, U, max_cubes=500)
            lam = carleson_constant(S)
            eta = largest_feasible_eta(S)
            W = sparse_witness(S, eta)
            rep = verify_witness(S, W)
            ok = rep["passed"] and 1 / eta >= lam and eta <= 1 / lam
            extra = _independent_witness_check(S, W)
            gaps.append(float(1 / lam - eta))
            if not ok or extra is not None:
                fail = _first(fail, {"instance": k, "report": rep["counterexample"], "independent": extra,
                                     "carleson": fmt_rational(lam), "eta": fmt_rational(eta)})
    return make_report("05_carleson_sparse", scope={"instances": instances, "max_cubes": 500},
                       numeric={"max_eta_gap": max(gaps)}, passed=fail is None, counterexample=fail,
                       seed=seed, runtime_ms=t["ms"])


# --- 6: anti-Carleson stacks -----------------------------------------------

ETAS = (Fraction(1, 8), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4))


def check_06_stacks(seed=None, instances: int = 200) -> dict:
    seed = resolve_seed(seed)
    fail = None
    found = none = 0
    with timer() as t:
        for k in range(instances):
            rng = make_rng(seed, "stack", k)
            dim, depth = _random_config(rng)
            U = gen.random_universe(rng, dim, min(depth, 6))
            S = gen.random_family(rng, U, max_cubes=300)
            lam = carleson_constant(S)
            cubes = list(S)
            for eta in ETAS:
                for M in (1, 2, 3, 4):
                    Q = detect_stack(S, eta, M)
                    if Q is None:
                        none += 1
                        if lam > Fraction(M) / (1 - eta):
                            fail = _first(fail, {"instance": k, "eta": fmt_rational(eta), "M": M, "carleson": fmt_rational(lam)})
                    else:
                        found += 1
                        layer = [R for R in cubes if Q.contains(R) and brute_distance_nested(cubes, Q, R) == M]
                        mass = sum((as_fraction(R.volume) for R in layer), Fraction(0))
                        if mass < eta * as_fraction(Q.volume) or (M + 1) * eta > lam:
                            fail = _first(fail, {"instance": k, "eta": fmt_rational(eta), "M": M, "stack": Q.compact()})
    return make_report("06_stacks", scope={"instances": instances, "etas": [fmt_rational(e) for e in ETAS], "heights": [1, 2, 3, 4]},
                       numeric={"found": found, "none": none}, passed=fail is None, counterexample=fail,
                       seed=seed, runtime_ms=t["ms"])


# --- 7: splitting ----------------------------------------------------------

def check_07_splitting(seed=None, instances: int = 200) -> dict:
    seed = resolve_seed(seed)
    fail = None
    with timer() as t:
        for k in range(instances):
            rng = make_rng(seed, "split", k)
            dim, depth = _random_config(rng)
            U = gen.random_universe(rng, dim, min(depth, 6))
            S = gen.random_family(rng, U, max_cubes=300)
            lam = carleson_constant(S)
            for m in (2, 3, 4):
                parts = split_family(S, m)
                union = set().union(*(p.as_set() for p in parts))
                disjoint = sum(len(p) for p in parts) == len(S)
                bound = 1 + (lam - 1) / m
                over = [fmt_rational(carleson_constant(p)) for p in parts if len(p) and carleson_constant(p) > bound]
                if union != S.as_set() or not disjoint or over:
                    fail = _first(fail, {"instance": k, "m": m, "bound": fmt_rational(bound), "over": over})
    return make_report("07_splitting", scope={"instances": instances, "m": [2, 3, 4]},
                       passed=fail is None, counterexample=fail, seed=seed, runtime_ms=t["ms"])


# --- 8: augmentation constant ------------------------------------------------

def check_08_augmentation(seed=None, instances: int = 100) -> dict:
    seed = resolve_seed(seed)
    fail = None
    with timer() as t:
        for k in range(instances):
            rng = make_rng(seed, "augment", k)
            dim = 1 if rng.random() < 0.7 else 2
            U = gen.random_universe(rng, dim, int(rng.integers(2, 7)) if dim == 1 else int(rng.integers(1, 4)))
            S = gen.random_family(rng, U, max_cubes=200)
            fams = {}
            for Q in S:
                sub = U.subtree(Q)
                if rng.random() < 0.3:
                    fams[Q] = stop(Q, gen.random_predicate(seed * 7919 + k, float(rng.uniform(0.1, 0.7))), sub)
                else:
                    fams[Q] = CubeFamily(set(gen.random_family(rng, sub)) | {Q}, U.lattice, validate=False)
            lam0 = carleson_constant(S)
            lam = max(carleson_constant(F) for F in fams.values())
            out = augment(S, fams)
            got = carleson_constant(out)
            if got > lam * (lam0 + 1) or not S.as_set() <= out.as_set():
                fail = _first(fail, {"instance": k, "augmented": fmt_rational(got), "bound": fmt_rational(lam * (lam0 + 1))})
    return make_report("08_augmentation", scope={"instances": instances},
                       passed=fail is None, counterexample=fail, seed=seed, runtime_ms=t["ms"])


# --- 9: λ-oscillation ------------------------------------------------------

def brute_lambda_oscillation(values, lam) -> Fraction:
    """Minimum oscillation over every cell subset of measure at least ``(1-λ)`` of the cube."""
    v = [Fraction(float(x)) for x in np.ravel(values)]
    N = len(v)
    best = None
    for r in range(1, N + 1):
        if Fraction(r, N) < 1 - lam:
            continue
        for E in itertools.combinations(range(N), r):
            vals = [v[i] for i in E]
            osc = max(vals) - min(vals)
            if best is None or osc < best:
                best = osc
    return best


LAMBDAS = (Fraction(1, 16), Fraction(1, 8), Fraction(1, 4), Fraction(1, 3), Fraction(1, 2), Fraction(3, 4))


def check_09_oscillation(seed=None, samples: int = 6) -> dict:
    seed = resolve_seed(seed)
    fail = None
    grids = [(1, 0), (1, 1), (1, 2), (1, 3), (2, 0), (2, 1), (3, 0), (3, 1)]
    count = 0
    with timer() as t:
        for dim, depth in grids:
            top = Cube([0] * dim, 1)
            for s in range(samples):
                rng = make_rng(seed, "osc9", dim, depth, s)
                N = (1 << depth) ** dim
                vals = rng.integers(-3, 4, size=N).astype(float) if s % 2 else rng.normal(size=N)
                f = GridFunction(top, depth, vals.reshape((1 << depth,) * dim))
                for lam in LAMBDAS:
                    w = lambda_oscillation(f, top, lam)
                    want = brute_lambda_oscillation(vals, lam)
                    cells = w.cells()
                    sub = [Fraction(float(vals[i])) for i in cells]
                    ok = w.value_exact == want and Fraction(len(cells), N) >= 1 - lam and max(sub) - min(sub) == want
                    count += 1
                    if not ok:
                        fail = _first(fail, {"dim": dim, "depth": depth, "lambda": fmt_rational(lam),
                                             "got": fmt_rational(w.value_exact), "brute": fmt_rational(want)})
        fx = GridFunction.from_function(Cube([0], 1), 3, lambda x: x[0])
        example = lambda_oscillation(fx, Cube([0], 1), Fraction(1, 4)).value_exact
        if example != Fraction(5, 8):
            fail = _first(fail, {"example": fmt_rational(example), "expected": "5/8"})
        limit = []
        for d in (6, 10):
            fx = GridFunction.from_function(Cube([0], 1), d, lambda x: x[0])
            val = lambda_oscillation(fx, Cube([0], 1), Fraction(1, 4)).value_exact
            limit.append(fmt_rational(val))
            if abs(val - Fraction(3, 4)) > Fraction(1, 1 << d):
                fail = _first(fail, {"limit_depth": d, "value": fmt_rational(val)})
    return make_report("09_lambda_oscillation", scope={"grids": grids, "lambdas": [fmt_rational(x) for x in LAMBDAS], "comparisons": count},
                       exact={"identity_example": fmt_rational(example), "limit_values": limit},
                       passed=fail is None, counterexample=fail, seed=seed, runtime_ms=t["ms"])


# --- 10: oscillation family --------------------------------------------------

def check_10_osc_family(seed=None, per_dim: int = 50) -> dict:
    seed = resolve_seed(seed)
    fail = None
    worst = Fraction(0)
    with timer() as t:
        for dim, depth, margin in ((1, 10, 3), (2, 5, 2)):
            lam = Fraction(1, 1 << (dim + 2))
            top = Cube([0] * dim, 1)
            for k in range(per_dim):
                rng = make_rng(seed, "oscfam", dim, k)
                d = int(rng.integers(max(margin + 1, depth - 3), depth + 1))
                f = gen.spike_mixture(rng, top, d, margin)
                S, rep, _ = build_oscillation_family(f, lam)
                worst = max(worst, as_fraction(rep["exact"]["carleson"]))
                if not rep["passed"]:
                    fail = _first(fail, {"dim": dim, "instance": k, **(rep["counterexample"] or {})})
    return make_report("10_oscillation_family", scope={"per_dim": per_dim, "configs": [[1, 10], [2, 5]]},
                       exact={"max_carleson": fmt_rational(worst), "bound": "6"},
                       passed=fail is None, counterexample=fail, seed=seed, runtime_ms=t["ms"])


# --- 11: summation trick -----------------------------------------------------

def check_11_summation(seed=None, instances: int = 100) -> dict:
    seed = resolve_seed(seed)
    fail = None
    with timer() as t:
        for k in range(instances):
            rng = make_rng(seed, "sum", k)
            dim = 1 if rng.random() < 0.7 else 2
            U = gen.random_universe(rng, dim, int(rng.integers(1, 6)) if dim == 1 else int(rng.integers(1, 4)))
            S = CubeFamily(set(gen.random_family(rng, U)) | {U.top}, validate=False)
            L = int(rng.integers(1, U.depth + 3))
            a = DecaySequence.geometric(Fraction(1, 2), L) if k % 3 else DecaySequence([Fraction(int(x), 8) for x in rng.integers(0, 9, size=L)])
            if k % 3:
                closed = 4 - Fraction(L + 2, 1 << (L - 1))
                if a.beta != closed:
                    fail = _first(fail, {"instance": k, "beta": fmt_rational(a.beta), "closed_form": fmt_rational(closed)})
            psi = {R: float(rng.exponential()) * (rng.random() < 0.8) for R in U.cubes()}
            rep = summation_trick_check(S, U, a, psi)
            if not rep["passed"]:
                fail = _first(fail, {"instance": k, **rep["counterexample"]})
    return make_report("11_summation_trick", scope={"instances": instances},
                       passed=fail is None, counterexample=fail, seed=seed, runtime_ms=t["ms"])


# --- 12: maximal theorem -----------------------------------------------------

PS_MAX = (Fraction(3, 2), Fraction(2), Fraction(4), math.inf)


def check_12_maximal(seed=None, instances: int = 200) -> dict:
    seed = resolve_seed(seed)
    fail = None
    worst = Fraction(0)
    with timer() as t:
        for k in range(instances):
            rng = make_rng(seed, "max", k)
            dim = 1 if rng.random() < 0.7 else 2
            depth = int(rng.integers(2, 8)) if dim == 1 else int(rng.integers(1, 5))
            top = Cube([0] * dim, 1)
            U = TruncatedLattice(top, depth)
            F = gen.random_family(rng, U)
            f = gen.nonneg_function(rng, top, depth)
            w = gen.positive_weight(rng, top, depth)
            p = PS_MAX[k % len(PS_MAX)]
            rep = verify_maximal_theorem(f, w, F, p)
            worst = max(worst, as_fraction(rep["exact"]["weak_constant"]))
            if not rep["passed"]:
                fail = _first(fail, {"instance": k, "p": str(p), **rep["counterexample"]})
    return make_report("12_maximal_theorem", scope={"instances": instances, "p": ["3/2", "2", "4", "inf"]},
                       exact={"max_weak_ratio": fmt_rational(worst), "bound": "1"},
                       passed=fail is None and worst <= 1, counterexample=fail, seed=seed, runtime_ms=t["ms"])


# --- 13: weighted sparse forms -------------------------------------------------

_P_CHOICES = (Fraction(3, 2), Fraction(2), Fraction(3), Fraction(4), math.inf)


def random_profile(rng, m: int) -> ExponentProfile:
    """Random exponents with ``Σ r_i / p_i = 1`` (at least one finite ``p_i``)."""
    while True:
        ps = [_P_CHOICES[int(rng.integers(len(_P_CHOICES)))] for _ in range(m)]
        if any(p != math.inf for p in ps):
            break
    finite = [i for i, p in enumerate(ps) if p != math.inf]
    raw = [Fraction(int(x), 1) for x in rng.integers(1, 5, size=len(finite))]
    tot = sum(raw)
    r = [Fraction(int(rng.integers(1, 4)), 2) for _ in ps]
    for i, s in zip(finite, raw):
        r[i] = s / tot * ps[i]
    return ExponentProfile(ps, r)


def _sparse_instance(rng, top, depth):
    U = TruncatedLattice(top, depth)
    S = gen.random_family(rng, U)
    W = sparse_witness(S, largest_feasible_eta(S))
    return S, W


def check_13_kbound(seed=None, instances: int = 200) -> dict:
    seed = resolve_seed(seed)
    fail = None
    ratios = []
    with timer() as t:
        for k in range(instances):
            rng = make_rng(seed, "kbound", k)
            m = 2 + k % 2
            dim = 1 if rng.random() < 0.75 else 2
            depth = int(rng.integers(3, 7)) if dim == 1 else int(rng.integers(2, 4))
            top = Cube([0] * dim, 1)
            S, W = _sparse_instance(rng, top, depth)
            prof = random_profile(rng, m)
            ws = constrained_weights([gen.positive_weight(rng, top, depth) for _ in range(m - 1)], prof.q_i)
            fs = [gen.nonneg_function(rng, top, depth) for _ in range(m)]
            rep = verify_kbound(S, W, prof, ws, fs)
            closed_ok = prof.gamma == prof.gamma_raw and prof.tau == prof.q * max(
                (Fraction(0) if p == math.inf else 1 / (p - 1)) for p in prof.p)
            if rep["numeric"]["rhs"] > 0:
                ratios.append(rep["numeric"]["lhs"] / rep["numeric"]["rhs"])
            if not rep["passed"] or not closed_ok:
                fail = _first(fail, {"instance": k, "profile": prof.to_json(), **(rep["counterexample"] or {})})
    return make_report("13_kbound", scope={"instances": instances, "m": [2, 3]},
                       numeric={"max_lhs_over_rhs": max(ratios) if ratios else 0.0},
                       passed=fail is None, counterexample=fail, seed=seed, runtime_ms=t["ms"])


# --- 14: weighted L^p for sparse operators -------------------------------------

def _ap_characteristic(v: GridFunction, p: Fraction, scope) -> float:
    w = renormalize(v, p)
    return muckenhoupt_norm([v, w], [Fraction(1), p - 1], scope)


def check_14_main_theorem(seed=None, instances: int = 100) -> dict:
    seed = resolve_seed(seed)
    fail = None
    ratios = {"p>1": [], "p<=1": []}
    with timer() as t:
        for branch, ps in (("p>1", [Fraction(4), Fraction(4)]), ("p<=1", [Fraction(2), Fraction(2)])):
            for k in range(instances):
                rng = make_rng(seed, "main", branch, k)
                dim = 1 if rng.random() < 0.75 else 2
                depth = int(rng.integers(3, 7)) if dim == 1 else int(rng.integers(2, 4))
                top = Cube([0] * dim, 1)
                S, W = _sparse_instance(rng, top, depth)
                vs = [gen.positive_weight(rng, top, depth) for _ in ps]
                fs = [gen.nonneg_function(rng, top, depth) for _ in ps]
                rep = verify_main_theorem(S, W, vs, ps, fs)
                if rep["scope"]["branch"] != branch:
                    fail = _first(fail, {"branch": branch, "got": rep["scope"]["branch"]})
                if rep["numeric"]["rhs"] > 0:
                    ratios[branch].append(rep["numeric"]["lhs"] / rep["numeric"]["rhs"])
                if not rep["passed"]:
                    fail = _first(fail, {"branch": branch, "instance": k, **rep["counterexample"]})
        exps = {}
        for p in (Fraction(5, 4), Fraction(3, 2), Fraction(2), Fraction(3), Fraction(6)):
            info = main_theorem_constant([p], Fraction(1, 2))
            got = info["exponent"] / p
            want = max(1 / (p - 1), Fraction(1))
            exps[fmt_rational(p)] = fmt_rational(got)
            if got != want:
                fail = _first(fail, {"m1_p": fmt_rational(p), "exponent": fmt_rational(got), "expected": fmt_rational(want)})
            rng = make_rng(seed, "main-ap", fmt_rational(p))
            v = gen.positive_weight(rng, Cube([0], 1), 5)
            U = TruncatedLattice(Cube([0], 1), 5)
            joint = muckenhoupt_norm([renormalize(v, p), v], info["muckenhoupt_q"], U) ** float(info["exponent"])
            ap = _ap_characteristic(v, p, U) ** float(want)
            if not math.isclose(joint, ap, rel_tol=1e-9):
                fail = _first(fail, {"m1_p": fmt_rational(p), "joint": joint, "ap": ap})
    return make_report("14_main_theorem", scope={"instances_per_branch": instances, "branches": {"p>1": "p1=p2=4", "p<=1": "p1=p2=2"}},
                       exact={"m1_exponent_over_p": exps},
                       numeric={k: max(v) if v else 0.0 for k, v in ratios.items()},
                       passed=fail is None, counterexample=fail, seed=seed, runtime_ms=t["ms"])


# --- 15: sparse domination pipeline --------------------------------------------

DOMINATION_DEPTH = 6
DOMINATION_LAMBDA = Fraction(1, 8)


def check_15_domination(seed=None, seeds: int = 20) -> dict:
    seed = resolve_seed(seed)
    fail = None
    stats = {}
    consts_ok = True
    with timer() as t:
        for name in ("hilbert", "maxpow"):
            for m in (1, 2):
                K = make_kernel(name, m)
                cs = []
                worst = [Fraction(0)] * 3
                for s in range(seeds):
                    rng = make_rng(seed, "dominate", name, m, s)
                    fs = [generate("indicator", Cube([0], 1), DOMINATION_DEPTH, rng) for _ in range(m)]
                    rep = dominate(K, fs, DOMINATION_LAMBDA)
                    got = [as_fraction(x) for x in rep["family_constants"]]
                    worst = [max(a, b) for a, b in zip(worst, got)]
                    cs.append(rep["c_fit"])
                    if not rep["passed"]:
                        consts_ok = False
                        fail = _first(fail, {"kernel": name, "m": m, "seed": s, "family_constants": rep["family_constants"], "c_fit": rep["c_fit"]})
                arr = np.array(cs)
                cv = float(arr.std() / arr.mean()) if arr.mean() > 0 else math.inf
                stats[f"{name}_m{m}"] = {"cv": cv, "c_fit_mean": float(arr.mean()), "c_fit_max": float(arr.max()),
                                         "family_constants_max": [fmt_rational(x) for x in worst]}
                if not cv < 0.5:
                    fail = _first(fail, {"kernel": name, "m": m, "cv": cv})
    passed = consts_ok and all(v["cv"] < 0.5 for v in stats.values())
    return make_report("15_sparse_domination", scope={"seeds": seeds, "depth": DOMINATION_DEPTH, "lambda": fmt_rational(DOMINATION_LAMBDA),
                                                      "kernels": ["hilbert", "maxpow"], "m": [1, 2]},
                       exact={"bounds": ["6", "18", "42"]}, numeric=stats,
                       passed=passed, counterexample=fail, seed=seed, runtime_ms=t["ms"])


CHECKS = {
    1: ("three_lattice", check_01_three_lattice),
    2: ("cover_cubes", check_02_cover_cubes),
    3: ("forest", check_03_forest),
    4: ("stopping", check_04_stopping),
    5: ("carleson_sparse", check_05_sparse),
    6: ("stacks", check_06_stacks),
    7: ("splitting", check_07_splitting),
    8: ("augmentation", check_08_augmentation),
    9: ("lambda_oscillation", check_09_oscillation),
    10: ("oscillation_family", check_10_osc_family),
    11: ("summation_trick", check_11_summation),
    12: ("maximal_theorem", check_12_maximal),
    13: ("kbound", check_13_kbound),
    14: ("main_theorem", check_14_main_theorem),
    15: ("sparse_domination", check_15_domination),
}


def resolve_checks(names) -> list:
    if not names or names == ["all"]:
        return sorted(CHECKS)
    out = []
    for nm in names:
        if str(nm).isdigit() and int(nm) in CHECKS:
            out.append(int(nm))
            continue
        hits = [k for k, (label, _) in CHECKS.items() if label == nm]
        if not hits:
            raise KeyError(nm)
        out.extend(hits)
    return out


def _run_one(args):
    k, seed = args
    return CHECKS[k][1](seed)


def run_suite(seed=None, names=None, jobs: int = 1) -> dict:
    seed = resolve_seed(seed)
    ks = resolve_checks(names)
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            reports = list(ex.map(_run_one, [(k, seed) for k in ks]))
    else:
        reports = [_run_one((k, seed)) for k in ks]
    return {"seed": seed, "passed": all(r["passed"] for r in reports), "checks": reports}
