"""Weighted dyadic maximal operator, Muckenhoupt norms and weighted sparse bounds.

Weights are positive :class:`GridFunction` values on the same grid as the
functions.  Exponents are Fractions, with ``math.inf`` allowed where the
statement allows ``p = ∞``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .carleson import SparseWitness
from .dyadic import as_fraction, fmt_rational, parse_rational
from .errors import AlignmentError, DomainError, WeightConstraintError
from .grid import GridFunction
from .lattice import TruncatedLattice

__all__ = [
    "ExponentProfile",
    "conjugate",
    "dyadic_maximal",
    "verify_maximal_theorem",
    "muckenhoupt_norm",
    "verify_kbound",
    "renormalize",
    "renormalization_forms",
    "main_theorem_constant",
    "verify_main_theorem",
    "constrained_weights",
]

INF = math.inf
REL = 1e-9


def _exp(p):
    if p == INF or (isinstance(p, str) and p.strip().lower() in ("inf", "infinity", "∞")):
        return INF
    return as_fraction(p) if not isinstance(p, str) else parse_rational(p)


def conjugate(p):
    """``p' = p / (p - 1)``, with ``∞' = 1``."""
    p = _exp(p)
    if p == INF:
        return Fraction(1)
    if p == 1:
        return INF
    return p / (p - 1)


def _inv(p):
    return Fraction(0) if p == INF else 1 / p


def _fmt(x):
    return "inf" if x == INF else fmt_rational(x)


@dataclass(frozen=True)
class ExponentProfile:
    p: tuple
    r: tuple

    def __init__(self, p, r):
        p = tuple(_exp(x) for x in p)
        r = tuple(as_fraction(x) if not isinstance(x, str) else parse_rational(x) for x in r)
        if len(p) != len(r) or not p:
            raise DomainError("p and r must be non-empty and of equal length")
        if any(x != INF and x <= 1 for x in p):
            raise DomainError("every p_i must lie in (1, inf]")
        if any(x <= 0 for x in r):
            raise DomainError("every r_i must be positive")
        if sum((ri * _inv(pi) for pi, ri in zip(p, r)), Fraction(0)) != 1:
            raise DomainError("sum r_i / p_i must equal 1")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "r", r)

    @property
    def m(self) -> int:
        return len(self.p)

    @property
    def q_i(self) -> tuple:
        return tuple(ri * (1 - _inv(pi)) for pi, ri in zip(self.p, self.r))

    @property
    def q(self) -> Fraction:
        return sum(self.q_i, Fraction(0))

    @property
    def gamma(self) -> Fraction:
        return max(conjugate(pi) for pi in self.p)

    @property
    def gamma_raw(self) -> Fraction:
        """``max_i (1 + r_i / (p_i q_i))`` evaluated literally."""
        return max(1 + ri * _inv(pi) / qi for pi, ri, qi in zip(self.p, self.r, self.q_i))

    @property
    def tau(self) -> Fraction:
        return self.q * max(Fraction(0) if pi == INF else 1 / (pi - 1) for pi in self.p)

    def constant_factor(self) -> float:
        """``∏ (p_i')^{r_i}``."""
        return math.prod(float(conjugate(pi)) ** float(ri) for pi, ri in zip(self.p, self.r))

    def to_json(self) -> dict:
        return {
            "p": [_fmt(x) for x in self.p],
            "r": [fmt_rational(x) for x in self.r],
            "q": [fmt_rational(x) for x in self.q_i],
            "gamma": fmt_rational(self.gamma),
            "tau": fmt_rational(self.tau),
        }

    @classmethod
    def from_json(cls, obj) -> "ExponentProfile":
        return cls([_exp(x) if isinstance(x, str) else x for x in obj["p"]], obj["r"])


# --- exact integration over aligned cubes ----------------------------------

class _Exact:
    """Exact prefix sums of a cellwise array, queried over aligned cubes."""

    def __init__(self, ref: GridFunction, v: np.ndarray):
        self.ref = ref
        pad = np.zeros(tuple(s + 1 for s in v.shape), dtype=object)
        pad[(slice(1, None),) * v.ndim] = v
        for ax in range(v.ndim):
            pad = np.cumsum(pad, axis=ax, dtype=object)
        self.prefix = pad
        self.cv = ref.cell_volume

    def __call__(self, Q) -> Fraction:
        sl = self.ref.aligned_slices(Q)
        if sl is None:
            raise AlignmentError(f"{Q!r} is not cell-aligned")
        if sl == ():
            return Fraction(0)
        tot = Fraction(0)
        for corner in itertools.product((0, 1), repeat=len(sl)):
            idx = tuple(s.stop if c else s.start for s, c in zip(sl, corner))
            sign = (-1) ** (len(sl) - sum(corner))
            tot += sign * self.prefix[idx]
        return tot * self.cv


def _cubes(F):
    if F is None:
        return []
    if isinstance(F, TruncatedLattice):
        return list(F.cubes())
    return list(F)


def _exact_arrays(f: GridFunction, w: GridFunction):
    """Cellwise ``w`` and ``|f| w`` as Fractions (products of floats are exact)."""
    f._check(w)
    wv = np.empty(w.values.shape, dtype=object)
    fw = np.empty(w.values.shape, dtype=object)
    for idx in np.ndindex(w.values.shape):
        wv[idx] = Fraction(float(w.values[idx]))
        fw[idx] = Fraction(abs(float(f.values[idx]))) * wv[idx]
    return wv, fw


def _maximal_exact(f: GridFunction, w: GridFunction, F, arrays=None):
    wv, fw = arrays or _exact_arrays(f, w)
    num = _Exact(f, fw)
    den = _Exact(f, wv)
    M = np.full(f.values.shape, Fraction(0), dtype=object)
    for Q in _cubes(F):
        sl = f.aligned_slices(Q)
        if sl is None:
            raise AlignmentError(f"{Q!r} is not cell-aligned")
        if sl == ():
            continue
        wq = den(Q)
        if wq == 0:
            continue
        val = num(Q) / wq
        block = M[sl]
        M[sl] = np.where(block < val, val, block)
    return M


def dyadic_maximal(f: GridFunction, w: GridFunction, F) -> GridFunction:
    """Restricted weighted maximal function over the cubes of ``F`` (0 off their union)."""
    M = _maximal_exact(f, w, F)
    return f.with_values(M.astype(np.float64))


def verify_maximal_theorem(f: GridFunction, w: GridFunction, F, p) -> dict:
    """Weak type (1,1) with constant 1 exactly, and the ``L^p(w)`` bound with ``p'``."""
    p = _exp(p)
    if p != INF and p <= 1:
        raise DomainError("p must lie in (1, inf]")
    wv, fw = _exact_arrays(f, w)
    M = _maximal_exact(f, w, F, (wv, fw))
    cv = f.cell_volume
    l1 = sum(fw.ravel(), Fraction(0)) * cv
    flat_M, flat_w, flat_fw = M.ravel(), wv.ravel(), fw.ravel()
    order = sorted(range(flat_M.size), key=lambda i: flat_M[i], reverse=True)
    weak_fail = None
    worst = Fraction(0)
    acc_w = acc_fw = Fraction(0)
    k = 0
    while k < len(order):
        v = flat_M[order[k]]
        if v <= 0:
            break
        while k < len(order) and flat_M[order[k]] == v:
            acc_w += flat_w[order[k]]
            acc_fw += flat_fw[order[k]]
            k += 1
        # for α just below v: Ω_α = {M >= v}
        lhs = v * acc_w * cv
        localised = acc_fw * cv
        if lhs > localised or localised > l1:
            weak_fail = {"level": fmt_rational(v), "w_level_set_times_alpha": float(lhs), "local_integral": float(localised)}
            break
        if l1 > 0:
            worst = max(worst, lhs / l1)
    Mf = f.with_values(M.astype(np.float64))
    lhs_p = Mf.lp_norm(p, w)
    rhs_p = float(conjugate(p)) * f.lp_norm(p, w)
    strong_ok = lhs_p <= rhs_p * (1 + REL) + 1e-300
    passed = weak_fail is None and strong_ok
    return {
        "check": "maximal_theorem",
        "scope": {"cubes": len(_cubes(F)), "cells": int(f.values.size), "p": _fmt(p)},
        "exact": {"weak_constant": fmt_rational(worst), "l1_norm": fmt_rational(l1)},
        "numeric": {"lp_lhs": lhs_p, "lp_rhs": rhs_p},
        "passed": passed,
        "counterexample": weak_fail if weak_fail else (None if strong_ok else {"lp_lhs": lhs_p, "lp_rhs": rhs_p}),
    }


# --- Muckenhoupt norms -----------------------------------------------------

def muckenhoupt_norm(weights, qs, scope) -> float:
    """``max_Q ∏ (w_i)_Q^{q_i}`` over the cubes of ``scope``."""
    weights = list(weights)
    qs = [float(as_fraction(q)) for q in qs]
    if len(weights) != len(qs):
        raise DomainError("one exponent per weight")
    if any(q <= 0 for q in qs):
        raise DomainError("exponents must be positive")
    for w in weights[1:]:
        weights[0]._check(w)
    best = 0.0
    for Q in _cubes(scope):
        val = 1.0
        for w, q in zip(weights, qs):
            val *= w.average(Q) ** q
        best = max(best, val)
    return best


def _check_constraint(weights, qs):
    logs = sum(float(q) * np.log(w.values) for w, q in zip(weights, qs))
    err = float(np.abs(np.expm1(logs)).max())
    if err > REL:
        raise WeightConstraintError(f"prod w_i^q_i deviates from 1 by {err:.3e}", max_error=err)
    return err


def constrained_weights(free, qs):
    """Complete ``free`` weights with the last one solved from ``∏ w_i^{q_i} ≡ 1``."""
    free = list(free)
    qs = [float(as_fraction(q)) for q in qs]
    logs = sum(q * np.log(w.values) for w, q in zip(free, qs[:-1]))
    return free + [free[0].with_values(np.exp(-logs / qs[-1]))]


def _witness_measure(w: GridFunction, W: SparseWitness, Q) -> float:
    return math.fsum(w.integral(C) for C in W.cubes(Q))


def verify_kbound(S, W: SparseWitness, profile: ExponentProfile, weights, fs) -> dict:
    """Check the weighted sparse-form bound with its closed-form constant, and η^q per cube."""
    weights, fs = list(weights), list(fs)
    m = profile.m
    if len(weights) != m or len(fs) != m:
        raise DomainError(f"profile has m = {m}")
    qs = profile.q_i
    err = _check_constraint(weights, qs)
    eta = W.eta
    r = [float(x) for x in profile.r]
    lhs_terms = []
    prodi_fail = None
    factors = []
    q = profile.q
    eta_q = float(eta ** q) if q.denominator == 1 else float(eta) ** float(q)
    fw = [f.abs() * w for f, w in zip(fs, weights)]
    for Q in S:
        vol = float(as_fraction(Q.volume))
        lhs_terms.append(math.prod(g.average(Q) ** ri for g, ri in zip(fw, r)) * vol)
        alpha = [_witness_measure(w, W, Q) / vol for w in weights]
        beta = [w.average(Q) for w in weights]
        pr = math.prod(a ** float(qi) for a, qi in zip(alpha, qs))
        factors.append({"cube": Q.compact(), "alpha": alpha, "beta": beta, "prod": pr})
        if pr < eta_q * (1 - REL) and prodi_fail is None:
            prodi_fail = {"cube": Q.to_json(), "prod_alpha_q": pr, "eta_q": eta_q}
    lhs = math.fsum(lhs_terms)
    muck = muckenhoupt_norm(weights, qs, S)
    norms = [f.lp_norm(pi, w) for f, w, pi in zip(fs, weights, profile.p)]
    const = float(eta) ** (-float(profile.tau)) * profile.constant_factor()
    rhs = const * muck ** float(profile.gamma) * math.prod(nv ** ri for nv, ri in zip(norms, r))
    ok = lhs <= rhs * (1 + REL)
    return {
        "check": "kbound",
        "scope": {"cubes": len(S), "m": m},
        "exact": {"eta": fmt_rational(eta), "eta_q_exponent": fmt_rational(q), **profile.to_json()},
        "numeric": {"lhs": lhs, "rhs": rhs, "muckenhoupt": muck, "constraint_error": err, "eta_q": eta_q},
        "constant_breakdown": {"eta^-tau": float(eta) ** (-float(profile.tau)), "prod_conjugates": profile.constant_factor(),
                               "muckenhoupt^gamma": muck ** float(profile.gamma), "norms": norms},
        "factors": factors,
        "passed": ok and prodi_fail is None,
        "prodi_ok": prodi_fail is None,
        "counterexample": prodi_fail if prodi_fail else (None if ok else {"lhs": lhs, "rhs": rhs}),
    }


# --- renormalisation and the weighted L^p estimate -------------------------

def renormalize(v: GridFunction, p) -> GridFunction:
    """``w = v^{-1/(p-1)}``, the weight with ``w = w^p v``."""
    p = _exp(p)
    if p == INF or p <= 1:
        raise DomainError("p must be a finite number > 1")
    if (v.values <= 0).any():
        raise DomainError("weights must be positive")
    w = v.with_values(v.values ** (-1.0 / float(p - 1)))
    err = float(np.abs(w.values ** float(p) * v.values / w.values - 1).max())
    if err > REL:
        raise WeightConstraintError(f"renormalisation identity fails by {err:.3e}")
    return w


def renormalization_forms(S, f: GridFunction, g: GridFunction, v: GridFunction, p) -> dict:
    """Both sides of the one-weight ``m = 1`` form and its two-weight renormalised version.

    With ``w = v^{-1/(p-1)}`` and ``f = h w`` the two forms are the same numbers.
    """
    w = renormalize(v, p)
    pf = float(_exp(p))
    gv = g * v
    one_sum = math.fsum(f.average(Q) * gv.average(Q) * float(as_fraction(Q.volume)) for Q in S)
    one_norms = (f.lp_norm(pf, v), g.lp_norm(pf / (pf - 1), v))
    h = f.with_values(f.values / w.values)
    hw = h * w
    two_sum = math.fsum(hw.average(Q) * gv.average(Q) * float(as_fraction(Q.volume)) for Q in S)
    two_norms = (h.lp_norm(pf, w ** pf * v), g.lp_norm(pf / (pf - 1), v))
    return {"one_weight": (one_sum, one_norms), "two_weight": (two_sum, two_norms)}


def main_theorem_constant(ps, eta) -> dict:
    """Branch, profile and composed constant for the weighted ``L^p`` estimate."""
    ps = [_exp(x) for x in ps]
    if any(x == INF or x <= 1 for x in ps):
        raise DomainError("every p_i must be a finite number > 1")
    eta = as_fraction(eta)
    m = len(ps)
    p = 1 / sum(1 / x for x in ps)
    if p > 1:
        prof = ExponentProfile(list(ps) + [conjugate(p)], [1] * (m + 1))
        c = float(eta) ** (-float(prof.tau)) * prof.constant_factor()
        branch = "p>1"
    else:
        prof = ExponentProfile(list(ps) + [INF], [p] * m + [1])
        c = (float(eta) ** (-float(prof.tau)) * prof.constant_factor()) ** (1 / float(p))
        branch = "p<=1"
    exponent = max([conjugate(x) for x in ps] + [p])
    return {
        "branch": branch,
        "p": p,
        "profile": prof,
        "constant": c,
        "exponent": exponent,
        "tau_effective": prof.tau if p > 1 else prof.tau / p,
        "muckenhoupt_q": [1 / conjugate(x) for x in ps] + [1 / p],
    }


def verify_main_theorem(S, W: SparseWitness, vs, ps, fs) -> dict:
    """``||A_{S,m}[f]||_{L^p(v)} <= C(η, p_i) [w]^{max(p_i', p)} ∏ ||f_i||_{L^{p_i}(v_i)}``."""
    from .domination import sparse_operator

    vs, fs = list(vs), list(fs)
    ps = [_exp(x) for x in ps]
    m = len(ps)
    if len(vs) != m or len(fs) != m:
        raise DomainError("one weight and one function per exponent")
    info = main_theorem_constant(ps, W.eta)
    p = info["p"]
    ws = [renormalize(v, pi) for v, pi in zip(vs, ps)]
    vlog = sum(float(p / pi) * np.log(v.values) for v, pi in zip(vs, ps))
    v = vs[0].with_values(np.exp(vlog))
    ws.append(v)
    identity_exponents = [1 - 1 / pi for pi in ps] + [1 / p]
    err = _check_constraint(ws, identity_exponents)
    A = sparse_operator(S, m, [f.abs() for f in fs])
    lhs = A.lp_norm(float(p), v)
    muck = muckenhoupt_norm(ws, info["muckenhoupt_q"], S)
    norms = [f.lp_norm(float(pi), vi) for f, vi, pi in zip(fs, vs, ps)]
    rhs = info["constant"] * muck ** float(info["exponent"]) * math.prod(norms)
    ok = lhs <= rhs * (1 + REL)
    return {
        "check": "main_theorem",
        "scope": {"cubes": len(S), "m": m, "branch": info["branch"]},
        "exact": {
            "p": fmt_rational(p),
            "exponent": fmt_rational(info["exponent"]),
            "tau": fmt_rational(info["tau_effective"]),
            "eta": fmt_rational(W.eta),
            "profile": info["profile"].to_json(),
        },
        "numeric": {"lhs": lhs, "rhs": rhs, "muckenhoupt": muck, "constraint_error": err},
        "constant_breakdown": {"C": info["constant"], "muckenhoupt^exponent": muck ** float(info["exponent"]), "norms": norms},
        "passed": ok,
        "counterexample": None if ok else {"lhs": lhs, "rhs": rhs},
    }
