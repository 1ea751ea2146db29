"""Carleson constants, sparse witnesses, anti-Carleson stacks and family splitting.

Witness sets are unions of bottom cells of a *frame* cube (the smallest
lattice cube containing the family).  Cells are indexed in Morton (Z-order)
so that every lattice cube in the frame is one contiguous index range, and a
witness set is stored as a sorted list of half-open ``[start, end)`` ranges.
"""

from __future__ import annotations

from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction

from .cube import Cube, cube_from_json
from .dyadic import as_fraction, fmt_rational, parse_rational
from .errors import DomainError, EmptyFamily, EtaTooLarge, RefinementTooDeep
from .forest import CubeFamily

__all__ = [
    "carleson_constant",
    "carleson_profile",
    "frame_cube",
    "morton_range",
    "largest_feasible_eta",
    "SparseWitness",
    "sparse_witness",
    "verify_witness",
    "detect_stack",
    "split_family",
]

DEFAULT_CAP = 8


def carleson_profile(S: CubeFamily) -> dict:
    """Map each family cube to ``(sum of |P| over family P ⊆ Q) / |Q|``."""
    F = S.forest()
    mass = {}
    for Q in reversed(S.cubes):
        mass[Q] = as_fraction(Q.volume) + sum((mass[c] for c in F.children[Q]), Fraction(0))
    return {Q: mass[Q] / as_fraction(Q.volume) for Q in S.cubes}


def carleson_constant(S: CubeFamily) -> Fraction:
    if not len(S):
        raise EmptyFamily("Carleson constant of an empty family")
    return max(carleson_profile(S).values())


# --- frame and Morton indexing ------------------------------------------

def frame_cube(S: CubeFamily) -> Cube:
    """Smallest lattice cube containing every cube of the family."""
    if not len(S):
        raise EmptyFamily("empty family has no frame")
    lat = S.lattice
    tops = list(S.forest().roots)
    big = max(as_fraction(Q.side) for Q in tops)
    cur = set()
    for Q in tops:
        while as_fraction(Q.side) < big:
            Q = lat.parent(Q)
        cur.add(Q)
    while len(cur) > 1:
        cur = {lat.parent(Q) for Q in cur}
    return cur.pop()


def _rel_gen(frame, Q) -> int:
    r = as_fraction(frame.side) / as_fraction(Q.side)
    if r.denominator != 1 or r.numerator & (r.numerator - 1):
        raise DomainError(f"{Q!r} is not aligned with the frame")
    return r.numerator.bit_length() - 1


def morton_range(frame, Q, res: int) -> tuple:
    """Cell index range ``[start, end)`` of ``Q`` among frame cells ``res`` generations down."""
    g = _rel_gen(frame, Q)
    if g > res:
        raise DomainError("cube is finer than the resolution")
    s = as_fraction(Q.side)
    u = []
    for a, b in zip(frame.corner, Q.corner):
        t = (as_fraction(b) - as_fraction(a)) / s
        if t.denominator != 1 or not 0 <= t < (1 << g):
            raise DomainError(f"{Q!r} is not a lattice subcube of the frame")
        u.append(int(t))
    code = 0
    for bit in range(g - 1, -1, -1):
        for v in u:
            code = (code << 1) | ((v >> bit) & 1)
    n = len(u)
    width = 1 << (n * (res - g))
    return code * width, (code + 1) * width


def _morton_cube(frame, g: int, code: int) -> Cube:
    """Inverse of the Morton code: the generation-``g`` subcube of ``frame`` with the given code."""
    n = frame.dim
    u = [0] * n
    for bit in range(g):
        for d in range(n - 1, -1, -1):
            u[d] |= (code & 1) << bit
            code >>= 1
    side = as_fraction(frame.side) / (1 << g)
    return Cube([as_fraction(a) + side * v for a, v in zip(frame.corner, u)], side)


def _deepest_gap(S: CubeFamily, frame) -> int:
    return max(_rel_gen(frame, Q) for Q in S)


def largest_feasible_eta(S: CubeFamily, cap: int = DEFAULT_CAP) -> Fraction:
    """Largest η ≤ 1/Λ realisable with cells at most ``cap`` generations below the smallest cube."""
    lam = carleson_constant(S)
    n = S.dim
    grid = 1 << (n * cap)
    return Fraction((grid * lam.denominator) // lam.numerator, grid)


def _resolution_for(eta: Fraction, n: int) -> int | None:
    """Generations below the smallest cube needed so that ``η |Q|`` is a whole number of cells."""
    d = eta.denominator
    if d & (d - 1):
        return None
    b = d.bit_length() - 1
    return -(-b // n)


@dataclass
class SparseWitness:
    eta: Fraction
    frame: Cube
    resolution: int  # generations below the frame
    sets: dict = field(default_factory=dict)  # cube -> list of [start, end)

    @property
    def cell_volume(self) -> Fraction:
        return as_fraction(self.frame.volume) / (1 << (self.frame.dim * self.resolution))

    def measure(self, Q) -> Fraction:
        return sum(e - s for s, e in self.sets.get(Q, ())) * self.cell_volume

    def cubes(self, Q) -> list:
        """The witness set of ``Q`` as a list of disjoint lattice cubes (one per aligned Morton block)."""
        n = self.frame.dim
        out = []
        for s, e in self.sets.get(Q, ()):
            while s < e:
                t = 0
                while t < self.resolution and s % (1 << (n * (t + 1))) == 0 and s + (1 << (n * (t + 1))) <= e:
                    t += 1
                out.append(_morton_cube(self.frame, self.resolution - t, s >> (n * t)))
                s += 1 << (n * t)
        return out

    def to_json(self) -> dict:
        return {
            "eta": fmt_rational(self.eta),
            "frame": self.frame.to_json(),
            "resolution": self.resolution,
            "order": "morton",
            "sets": {Q.compact(): [[s, e] for s, e in rs] for Q, rs in sorted(self.sets.items(), key=lambda kv: kv[0].sort_key())},
        }

    @classmethod
    def from_json(cls, obj) -> "SparseWitness":
        sets = {cube_from_json(k): [tuple(r) for r in v] for k, v in obj["sets"].items()}
        return cls(parse_rational(obj["eta"]), cube_from_json(obj["frame"]), int(obj["resolution"]), sets)


class _Occupied:
    """Sorted disjoint integer intervals supporting 'take first k free cells of a range'."""

    def __init__(self):
        self.starts: list = []
        self.ends: list = []

    def take(self, lo: int, hi: int, k: int) -> list:
        got = []
        pos = lo
        i = bisect_right(self.ends, lo)
        while k > 0 and pos < hi:
            nxt = self.starts[i] if i < len(self.starts) else hi
            if nxt > pos:
                end = min(nxt, hi, pos + k)
                got.append((pos, end))
                k -= end - pos
                pos = end
                continue
            pos = max(pos, self.ends[i])
            i += 1
        if k > 0:
            return None
        for s, e in got:
            self._insert(s, e)
        return got

    def _insert(self, s: int, e: int):
        i = bisect_left(self.starts, s)
        self.starts.insert(i, s)
        self.ends.insert(i, e)
        # merge neighbours
        if i + 1 < len(self.starts) and self.starts[i + 1] == e:
            self.ends[i] = self.ends.pop(i + 1)
            self.starts.pop(i + 1)
        if i > 0 and self.ends[i - 1] == s:
            self.ends[i - 1] = self.ends.pop(i)
            self.starts.pop(i)


def sparse_witness(S: CubeFamily, eta, cap: int = DEFAULT_CAP, round_down: bool = False) -> SparseWitness:
    """Greedy disjoint sets ``E_Q ⊆ Q`` with ``|E_Q| = η|Q|``, smallest cubes first."""
    eta = as_fraction(eta)
    if not 0 < eta <= 1:
        raise DomainError("eta must lie in (0, 1]")
    lam = carleson_constant(S)
    if eta * lam > 1:
        raise EtaTooLarge(f"eta = {eta} exceeds 1/Lambda = {1 / lam}", eta=str(eta), carleson=str(lam))
    n = S.dim
    frame = frame_cube(S)
    deepest = _deepest_gap(S, frame)
    extra = _resolution_for(eta, n)
    if extra is None or extra > cap:
        if not round_down:
            raise RefinementTooDeep(f"eta = {eta} needs more than {cap} extra generations", eta=str(eta))
        grid = 1 << (n * cap)
        eta = Fraction((eta.numerator * grid) // eta.denominator, grid)
        if eta == 0:
            raise RefinementTooDeep("eta rounds down to zero within the cap")
        extra = _resolution_for(eta, n)
    res = deepest + extra
    occ = _Occupied()
    sets = {}
    # smallest cubes first; ties in a fixed corner order
    for Q in reversed(S.cubes):
        lo, hi = morton_range(frame, Q, res)
        need = eta * (hi - lo)
        assert need.denominator == 1
        got = occ.take(lo, hi, int(need))
        if got is None:
            raise EtaTooLarge(f"greedy assignment ran out of cells in {Q!r}")
        sets[Q] = got
    return SparseWitness(eta, frame, res, sets)


def verify_witness(S: CubeFamily, W: SparseWitness) -> dict:
    """Check containment, disjointness and measure of witness sets, and Λ ≤ 1/η."""
    fail = None
    seen = []
    for Q in S.cubes:
        rs = W.sets.get(Q)
        if rs is None:
            fail = {"code": "MISSING", "cube": Q.to_json()}
            break
        lo, hi = morton_range(W.frame, Q, W.resolution)
        if any(s < lo or e > hi or s >= e for s, e in rs):
            fail = {"code": "CONTAINMENT", "cube": Q.to_json()}
            break
        if W.measure(Q) < W.eta * as_fraction(Q.volume):
            fail = {"code": "MEASURE", "cube": Q.to_json(), "measure": fmt_rational(W.measure(Q)),
                    "required": fmt_rational(W.eta * as_fraction(Q.volume))}
            break
        seen.extend((s, e, Q) for s, e in rs)
    if fail is None:
        seen.sort(key=lambda t: (t[0], t[1]))
        for (s1, e1, Q1), (s2, e2, Q2) in zip(seen, seen[1:]):
            if s2 < e1:
                fail = {"code": "DISJOINTNESS", "cubes": [Q1.to_json(), Q2.to_json()], "cell": s2}
                break
    lam = carleson_constant(S)
    if fail is None and lam * W.eta > 1:
        fail = {"code": "CARLESON", "carleson": fmt_rational(lam), "eta": fmt_rational(W.eta)}
    return {
        "check": "sparse_witness",
        "scope": {"cubes": len(S), "resolution": W.resolution},
        "exact": {"eta": fmt_rational(W.eta), "carleson": fmt_rational(lam), "inverse_eta": fmt_rational(1 / W.eta)},
        "passed": fail is None,
        "counterexample": fail,
    }


def detect_stack(S: CubeFamily, eta, M: int):
    """A cube ``Q ∈ S`` whose forest layer at distance ``M`` has mass ≥ η|Q|, or None."""
    if M < 1:
        raise DomainError("stack height must be at least 1")
    eta = as_fraction(eta)
    F = S.forest()
    for Q in S.cubes:
        layer = F.layer(Q, M)
        if layer and sum((as_fraction(R.volume) for R in layer), Fraction(0)) >= eta * as_fraction(Q.volume):
            return Q
    return None


def split_family(S: CubeFamily, m: int) -> list:
    """Split by forest depth modulo ``m``; each class is ``1 + (Λ-1)/m``-Carleson."""
    if m < 2:
        raise DomainError("m must be at least 2")
    F = S.forest()
    buckets = [[] for _ in range(m)]
    for Q in S.cubes:
        buckets[F.depth[Q] % m].append(Q)
    return [CubeFamily(b, S.lattice, validate=False) for b in buckets]
