"""Discretised multilinear kernels, sparse operators and the domination pipeline.

Kernels are one-dimensional: they are evaluated at cell centres of a grid,
and the single entry where every ``y_i`` coincides with ``x`` is set to zero
(the discrete principal value).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .carleson import carleson_constant
from .cube import Cube
from .dyadic import as_fraction, fmt_rational
from .errors import AlignmentError, DomainError, RegularityError
from .forest import CubeFamily, house
from .grid import GridFunction, generate
from .lattice import CANONICAL, TruncatedLattice
from .oscillation import build_oscillation_family, lambda_oscillation
from .rng import make_rng
from .shifted import LatticeDescriptor, all_labels
from .stopping import augment_stop

__all__ = [
    "DiscreteKernel",
    "KERNELS",
    "make_kernel",
    "apply_kernel",
    "estimate_weak_type",
    "check_oscillation_bound",
    "sparse_operator",
    "DecaySequence",
    "summation_trick_check",
    "averaging_augment",
    "dominate",
]


# --- kernels ---------------------------------------------------------------

def _hilbert(m: int):
    if m == 1:
        return lambda x, y: 1.0 / (x - y[0])
    if m == 2:
        def k2(x, y):
            a, b = x - y[0], x - y[1]
            return (a + b) / (np.abs(a) + np.abs(b)) ** 3
        return k2
    raise DomainError("hilbert kernel is defined for m in {1, 2}")


def _maxpow(m: int):
    def k(x, y):
        d = np.abs(x - y[0])
        for t in y[1:]:
            d = np.maximum(d, np.abs(x - t))
        return 1.0 / d ** m
    return k


KERNELS = {"hilbert": _hilbert, "maxpow": _maxpow}


@dataclass
class DiscreteKernel:
    name: str
    m: int
    size_constant: float = 1.0
    delta: float = 1.0
    scale: float = 1.0
    rule: object = field(default=None, repr=False)

    def __post_init__(self):
        if self.rule is None:
            if self.name not in KERNELS:
                raise DomainError(f"unknown kernel {self.name!r}")
            self.rule = KERNELS[self.name](self.m)
        if not 0 < self.delta <= 1:
            raise DomainError("smoothness exponent must lie in (0, 1]")

    def rho(self, t: float) -> float:
        return t ** self.delta

    def dini_log_integral(self) -> float:
        """``∫_0^1 ρ(t) log(1/t) dt/t`` in closed form for ``ρ(t) = t^δ``."""
        return 1.0 / self.delta ** 2

    def scaled(self, c: float) -> "DiscreteKernel":
        return DiscreteKernel(self.name, self.m, self.size_constant * abs(c), self.delta, self.scale * c, self.rule)

    def slab(self, x: float, ys: list) -> np.ndarray:
        """Kernel values at ``x`` over the product grid of ``ys`` (diagonal zeroed)."""
        mesh = np.meshgrid(*ys, indexing="ij") if self.m > 1 else [ys[0]]
        with np.errstate(divide="ignore", invalid="ignore"):
            v = self.scale * self.rule(x, mesh)
        diag = np.ones(v.shape, dtype=bool)
        for t in mesh:
            diag &= t == x
        v = np.where(diag, 0.0, v)
        return v

    def check_size(self, centers: np.ndarray) -> dict:
        """Verify ``|K| <= C / max|x - y_i|^m`` over all grid points."""
        worst = 0.0
        for x in centers:
            mesh = np.meshgrid(*([centers] * self.m), indexing="ij") if self.m > 1 else [centers]
            d = np.abs(x - mesh[0])
            for t in mesh[1:]:
                d = np.maximum(d, np.abs(x - t))
            v = np.abs(self.slab(x, [centers] * self.m))
            off = d > 0
            if off.any():
                worst = max(worst, float((v[off] * d[off] ** self.m).max()))
        ok = worst <= self.size_constant * (1 + 1e-12)
        return {"passed": ok, "max_scaled": worst, "C": self.size_constant}


def make_kernel(name: str, m: int, **kw) -> DiscreteKernel:
    return DiscreteKernel(name, m, **kw)


def _centers(f: GridFunction) -> np.ndarray:
    h = float(f.cell_side)
    return float(f.top.corner[0]) + h * (np.arange(f.n_per_axis) + 0.5)


def apply_kernel(K: DiscreteKernel, *fs: GridFunction) -> GridFunction:
    if len(fs) != K.m:
        raise DomainError(f"kernel has arity {K.m}, got {len(fs)} functions")
    f0 = fs[0]
    if f0.dim != 1:
        raise DomainError("kernels are implemented for n = 1 only")
    for g in fs[1:]:
        if not f0.same_grid(g):
            raise DomainError("all inputs must share one grid")
    c = _centers(f0)
    h = float(f0.cell_side)
    out = np.empty(c.size)
    vals = [g.values for g in fs]
    for i, x in enumerate(c):
        s = K.slab(x, [c] * K.m)
        for v in reversed(vals):
            s = s @ v
        out[i] = s * h ** K.m
    return GridFunction(f0.top, f0.depth, out)


def estimate_weak_type(K: DiscreteKernel, trials: int, seed=None, top: Cube | None = None, depth: int = 7) -> dict:
    """Empirical ``sup_α |{|T| > α}| (α / ∏||f_i||_1)^{1/m}`` over seeded inputs.

    The running maximum is recorded, so the estimate is monotone in ``trials``.
    """
    top = top or Cube([0], 1)
    best = 0.0
    history = []
    for t in range(trials):
        rng = make_rng(seed, "weak", K.name, K.m, t)
        fs = [generate("indicator", top, depth, rng, pieces=int(rng.integers(1, 4)), min_gen=1, max_gen=depth) for _ in range(K.m)]
        norms = math.prod(g.lp_norm(1) for g in fs)
        if norms == 0:
            history.append(best)
            continue
        T = np.abs(apply_kernel(K, *fs).values.ravel())
        a = np.sort(T)[::-1]
        vol = float(fs[0].cell_volume)
        counts = np.arange(1, a.size + 1) * vol
        pos = a > 0
        if pos.any():
            vals = counts[pos] * (a[pos] / norms) ** (1.0 / K.m)
            best = max(best, float(vals.max()))
        history.append(best)
    return {"C_W": best, "history": history, "trials": trials}


# --- oscillation bound -------------------------------------------------------

def check_oscillation_bound(K: DiscreteKernel, fs, Q, lam, C_fit: float | None = None) -> dict:
    """Compare ``ω_λ(T[f];Q)`` with ``Σ_k ρ(2^-k) ∏ |f_i|`` over the dilates ``Q_[2^{k+1}]``.

    Once the dilate contains the whole grid top the averages become
    ``||f_i||_1 / |Q_[2^{k+1}]|`` and the remaining tail is summed exactly as a
    geometric series.
    """
    fs = list(fs)
    g = apply_kernel(K, *fs)
    lhs = lambda_oscillation(g, Q, lam).value
    absf = [f.abs() for f in fs]
    l1 = [f.lp_norm(1) for f in fs]
    n = g.dim
    top = g.top
    rhs = 0.0
    k = 0
    while True:
        D = Q.dilate(1 << (k + 1))
        if D.contains(top):
            vol = float(as_fraction(D.volume))
            term = K.rho(2.0 ** -k) * math.prod(v / vol for v in l1)
            r = 2.0 ** (-K.delta) * 2.0 ** (-n * K.m)
            rhs += term / (1 - r)
            break
        rhs += K.rho(2.0 ** -k) * math.prod(a.average(D) for a in absf)
        k += 1
    ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
    out = {"check": "oscillation_bound", "lhs": lhs, "rhs_without_C": rhs, "ratio": ratio, "terms": k + 1}
    if C_fit is not None:
        out["passed"] = lhs <= C_fit * rhs * (1 + 1e-12)
    return out


# --- sparse operators --------------------------------------------------------

def sparse_operator(S, m: int, fs, p: float | None = None) -> GridFunction:
    """``Σ_{Q ∈ S} ∏ (f_i)_Q^p χ_Q`` on the grid of the inputs (``p`` defaults to 1)."""
    fs = list(fs)
    if len(fs) != m:
        raise DomainError(f"expected {m} functions")
    g0 = fs[0]
    out = np.zeros(g0.values.shape)
    for Q in S:
        sl = g0.aligned_slices(Q)
        if sl is None:
            raise AlignmentError(f"{Q!r} is not aligned with the grid")
        if sl == ():
            continue
        prod = 1.0
        for f in fs:
            a = f.average(Q)
            prod *= a if p is None else a ** p
        out[sl] += prod
    return g0.with_values(out)


# --- summation trick ---------------------------------------------------------

@dataclass
class DecaySequence:
    terms: list

    def __post_init__(self):
        self.terms = [as_fraction(t) for t in self.terms]
        if any(t < 0 for t in self.terms):
            raise DomainError("decay terms must be non-negative")

    def __call__(self, k: int) -> Fraction:
        return self.terms[k] if 0 <= k < len(self.terms) else Fraction(0)

    @property
    def beta(self) -> Fraction:
        return sum(((k + 1) * a for k, a in enumerate(self.terms)), Fraction(0))

    @classmethod
    def geometric(cls, ratio, length: int) -> "DecaySequence":
        r = as_fraction(ratio)
        return cls([r ** k for k in range(length)])


def summation_trick_check(S: CubeFamily, universe: TruncatedLattice, a: DecaySequence, Psi) -> dict:
    """Exact cellwise check of ``Σ_Q Σ_{R ⊇ Q} a(d(Q,R)) Ψ(R) χ_Q <= β Σ_U sup_{H(U)} Ψ χ_U``."""
    if universe.top not in S:
        raise RegularityError("family must contain the universe top")
    get = Psi.__getitem__ if hasattr(Psi, "__getitem__") else Psi
    lat = universe.lattice
    psi = {R: Fraction(float(get(R))) for R in universe.cubes()}
    if any(v < 0 for v in psi.values()):
        raise DomainError("Psi must be non-negative")
    beta = a.beta
    inner = {}
    for i in range(universe.depth + 1):
        for Q in universe.level(i):
            if Q in S:
                s, R, d = Fraction(0), Q, 0
                while True:
                    s += a(d) * psi[R]
                    if R == universe.top:
                        break
                    R, d = lat.parent(R), d + 1
                inner[Q] = s
    sup_house = {U: max(psi[R] for R in house(S, U, universe)) for U in S if U in universe}
    lhs, rhs = {}, {}
    for i in range(universe.depth + 1):
        for Q in universe.level(i):
            pl = lhs[lat.parent(Q)] if i else Fraction(0)
            pr = rhs[lat.parent(Q)] if i else Fraction(0)
            lhs[Q] = pl + inner.get(Q, 0)
            rhs[Q] = pr + sup_house.get(Q, 0)
    fail = None
    worst = Fraction(0)
    for C in universe.cells():
        L, R = lhs[C], beta * rhs[C]
        if L > R:
            fail = {"cell": C.to_json(), "lhs": float(L), "rhs": float(R)}
            break
        if R > 0:
            worst = max(worst, L / R)
    return {
        "check": "summation_trick",
        "scope": {"cubes": len(S), "depth": universe.depth},
        "exact": {"beta": fmt_rational(beta), "max_ratio": fmt_rational(worst)},
        "passed": fail is None,
        "counterexample": fail,
    }


# --- averaging stopping and the pipeline ------------------------------------

def _avg_predicate(fs, m: int):
    """``|f_i|_{Q2} <= 2m |f_i|_Q`` for every i, compared through integrals times volumes."""
    absf = [f.abs() for f in fs]
    cache = {}

    def integ(i, Q):
        key = (i, Q)
        v = cache.get(key)
        if v is None:
            v = absf[i].integral(Q)
            cache[key] = v
        return v

    def P(Q, Q2) -> bool:
        vq, vq2 = float(as_fraction(Q.volume)), float(as_fraction(Q2.volume))
        return all(integ(i, Q2) * vq <= 2 * m * integ(i, Q) * vq2 for i in range(len(absf)))

    return P, integ


def averaging_augment(S: CubeFamily, fs, universe: TruncatedLattice, check: bool = True):
    """Augment by averaging stopping times with ``K = (2m)^m``; returns ``(family, report)``."""
    fs = list(fs)
    m = len(fs)
    P, integ = _avg_predicate(fs, m)
    out = augment_stop(S, P, universe)
    fail = None
    if check:
        K = (2 * m) ** m
        avg = {}

        def prod_avg(Q):
            v = avg.get(Q)
            if v is None:
                v = math.prod(integ(i, Q) / float(as_fraction(Q.volume)) for i in range(m))
                avg[Q] = v
            return v

        lat = universe.lattice
        roofs = {}
        for i in range(universe.depth + 1):
            for R in universe.level(i):
                if R in out:
                    roofs[R] = R
                elif i:
                    roofs[R] = roofs.get(lat.parent(R))
                else:
                    roofs[R] = None
        for R, Q in roofs.items():
            if Q is not None and prod_avg(R) > K * prod_avg(Q) * (1 + 1e-12):
                fail = {"cube": R.to_json(), "roof": Q.to_json()}
                break
    return out, {"passed": fail is None, "counterexample": fail}


def _ascend(lat, Q, a: int):
    for _ in range(a):
        Q = lat.parent(Q)
    return Q


def dominate(K: DiscreteKernel, fs, lam, universe: TruncatedLattice | None = None) -> dict:
    """Run the sparse-domination pipeline and fit the constant.

    The kernel output ``g`` lives on the input grid ``T``.  It is zero-extended
    into a universe ``a`` generations above ``T`` with ``2^{-na} <= λ`` so that
    the support condition of the oscillation family holds.
    """
    fs = list(fs)
    lam = as_fraction(lam)
    f0 = fs[0]
    n = f0.dim
    g = apply_kernel(K, *fs)
    a = 0
    while Fraction(1, 1 << (n * a)) > lam:
        a += 1
    if universe is None:
        top = _ascend(CANONICAL, f0.top, a)
        universe = TruncatedLattice(top, f0.depth + a)
    gU = g.embed(universe.top)
    S, osc_report, _ = build_oscillation_family(gU, lam, universe)
    lam0 = carleson_constant(S)
    lifted, augmented, lam_lift, lam_aug = {}, {}, {}, {}
    roof_ok = True
    total = np.zeros(f0.values.shape)
    absf = [f.abs() for f in fs]
    base = LatticeDescriptor((), n)
    for j in all_labels(n):
        d = base.extend(j)
        Sj = CubeFamily({base.containing_triple(Q, j) for Q in S}, d, validate=False)
        Uj = TruncatedLattice(base.containing_triple(universe.top, j), universe.depth, d)
        Sj_aug, rep = averaging_augment(Sj, absf, Uj)
        roof_ok &= rep["passed"]
        lifted[j], augmented[j] = Sj, Sj_aug
        lam_lift[j], lam_aug[j] = carleson_constant(Sj), carleson_constant(Sj_aug)
        total += sparse_operator(Sj_aug, K.m, absf).values
    absg = np.abs(g.values)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(total > 0, absg / np.where(total > 0, total, 1), np.where(absg > 0, np.inf, 0.0))
    c_fit = float(ratios.max()) if ratios.size else 0.0
    b0, b1, b2 = Fraction(6), Fraction(6 * 3 ** n), Fraction(14 * 3 ** n)
    max_lift = max(lam_lift.values())
    max_aug = max(lam_aug.values())
    consts_ok = lam0 <= b0 and max_lift <= b1 and max_aug <= b2
    passed = bool(consts_ok and osc_report["passed"] and roof_ok and math.isfinite(c_fit))
    return {
        "check": "dominate",
        "scope": {"kernel": K.name, "m": K.m, "depth": f0.depth, "universe_depth": universe.depth},
        "lambda": fmt_rational(lam),
        "family_constants": [fmt_rational(lam0), fmt_rational(max_lift), fmt_rational(max_aug)],
        "family_bounds": [fmt_rational(b0), fmt_rational(b1), fmt_rational(b2)],
        "per_lattice": {"".join(map(str, j)): [fmt_rational(lam_lift[j]), fmt_rational(lam_aug[j])] for j in lam_lift},
        "c_fit": c_fit,
        "oscillation": osc_report,
        "roof_control": roof_ok,
        "passed": passed,
        "families": {"S": S, "lifted": lifted, "augmented": augmented},
    }

