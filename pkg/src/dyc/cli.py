"""Command-line entry point ``dyc``.

Exit status: 0 when every requested check passes, 1 when a check fails or a
library error is raised, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import generators as gen
from .carleson import (
    SparseWitness,
    carleson_constant,
    frame_cube,
    detect_stack,
    largest_feasible_eta,
    sparse_witness,
    split_family,
    verify_witness,
)
from .cube import cube_from_json, parse_cube
from .domination import dominate, make_kernel
from .dyadic import fmt_rational, parse_rational
from .errors import DomainError, DycError
from .forest import CubeFamily, house, roof
from .grid import GridFunction, generate
from .lattice import CANONICAL, TruncatedLattice, verify_multiresolution
from .oscillation import build_oscillation_family, lambda_oscillation
from .report import timer, to_json
from .rng import make_rng, resolve_seed
from .shifted import containing_triple, corner_label, cover_cubes, verify_three_lattice
from .suite import CHECKS, run_suite
from .weighted import (
    ExponentProfile,
    conjugate,
    constrained_weights,
    verify_kbound,
    verify_main_theorem,
    verify_maximal_theorem,
)


def _load(path):
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _emit(obj, out=None, drop_runtime=False):
    text = to_json(obj, drop_runtime=drop_runtime)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _family(args) -> CubeFamily:
    return CubeFamily.from_json(_load(args.family))


def _grid(path) -> GridFunction:
    return GridFunction.from_json(_load(path))


def _point(text):
    return tuple(parse_rational(t) for t in text.split(","))


def _cube_list(items) -> list:
    # either cube literals or a single JSON file holding a list of cubes
    if len(items) == 1 and items[0].endswith(".json"):
        obj = _load(items[0])
        obj = obj.get("cubes", obj) if isinstance(obj, dict) else obj
        return [cube_from_json(c) for c in obj]
    return [parse_cube(c) for c in items]


def _default_top(dim: int):
    return CANONICAL.cube_at((Fraction(0),) * dim, 0)


# --- subcommands ---------------------------------------------------------

def cmd_lattice(args) -> int:
    if args.action == "cube-at":
        _emit({"cube": CANONICAL.cube_at(_point(args.point), args.gen).to_json()}, args.out)
        return 0
    if args.action == "parent":
        Q = parse_cube(args.cube)
        _emit({"parent": CANONICAL.parent(Q).to_json()}, args.out)
        return 0
    if args.action == "children":
        Q = parse_cube(args.cube)
        _emit({"children": [C.to_json() for C in CANONICAL.children(Q)]}, args.out)
        return 0
    if args.action == "member":
        Q = parse_cube(args.cube)
        ok = CANONICAL.is_member(Q)
        _emit({"cube": Q.to_json(), "member": ok, "generation": CANONICAL.generation(Q) if ok else None}, args.out)
        return 0
    top = parse_cube(args.top) if args.top else _default_top(args.dim)
    with timer() as t:
        rep = verify_multiresolution(TruncatedLattice(top, args.depth))
    rep["runtime_ms"] = t["ms"]
    _emit(rep, args.out)
    return 0 if rep["passed"] else 1


def cmd_three(args) -> int:
    if args.action == "label":
        _emit({"point": [fmt_rational(x) for x in _point(args.point)], "label": list(corner_label(_point(args.point)))}, args.out)
        return 0
    if args.action == "triple":
        Q = parse_cube(args.cube)
        j = tuple(int(c) for c in args.label.split(","))
        _emit({"cube": Q.to_json(), "label": list(j), "triple": containing_triple(Q, j).to_json()}, args.out)
        return 0
    if args.action == "cover":
        cubes = _cube_list(args.cubes)
        d, covers = cover_cubes(cubes)
        _emit({"lattice": d.to_json(), "covers": [C.to_json() for C in covers]}, args.out)
        return 0
    top = CANONICAL.cube_at((Fraction(-1, 3),) * args.dim, -2)
    with timer() as t:
        rep = verify_three_lattice(TruncatedLattice(top, args.depth))
    rep["runtime_ms"] = t["ms"]
    _emit(rep, args.out)
    return 0 if rep["passed"] else 1


def cmd_forest(args) -> int:
    S = _family(args)
    F = S.forest()
    q = args.query
    if q == "edges":
        out = {"edges": [[a.to_json(), b.to_json()] for a, b in F.edges], "components": len(F.components)}
    elif q == "roof":
        R = roof(S, parse_cube(args.cube))
        out = {"roof": R.to_json() if R is not None else None}
    elif q == "distance":
        d = F.distance(parse_cube(args.cube), parse_cube(args.other))
        out = {"distance": d if d != float("inf") else "inf"}
    else:
        Q = parse_cube(args.cube)
        U = TruncatedLattice(frame_cube(S), args.depth)
        out = {"house": [R.to_json() for R in house(S, Q, U)]}
    _emit(out, args.out)
    return 0


def cmd_carleson(args) -> int:
    S = _family(args)
    a = args.action
    if a == "constant":
        print(fmt_rational(carleson_constant(S)))
        return 0
    if a == "witness":
        eta = parse_rational(args.eta) if args.eta else largest_feasible_eta(S, args.cap)
        W = sparse_witness(S, eta, cap=args.cap, round_down=args.round_down)
        rep = verify_witness(S, W)
        _emit({"witness": W.to_json(), "report": rep}, args.out)
        return 0 if rep["passed"] else 1
    if a == "stack":
        Q = detect_stack(S, parse_rational(args.eta or "1/2"), args.height)
        _emit({"stack": Q.to_json() if Q is not None else None}, args.out)
        return 0
    parts = split_family(S, args.m)
    lam = carleson_constant(S)
    bound = 1 + (lam - 1) / args.m
    consts = [fmt_rational(carleson_constant(p)) if len(p) else None for p in parts]
    ok = all(len(p) == 0 or carleson_constant(p) <= bound for p in parts)
    _emit({"classes": [p.to_json() for p in parts], "constants": consts, "bound": fmt_rational(bound), "passed": ok}, args.out)
    return 0 if ok else 1


def cmd_osc(args) -> int:
    f = _grid(args.grid)
    lam = parse_rational(args.lam)
    if args.universe_depth is not None:
        if args.universe_depth < f.depth:
            raise DomainError("universe depth is below the grid depth")
        f = f.refine(args.universe_depth - f.depth)
    if args.action == "value":
        Q = parse_cube(args.cube) if args.cube else f.top
        w = lambda_oscillation(f, Q, lam)
        _emit({"cube": Q.to_json(), "lambda": fmt_rational(lam), "value": fmt_rational(w.value_exact),
               "witness_cells": w.cells()}, args.out)
        return 0
    with timer() as t:
        S, rep, _ = build_oscillation_family(f, lam)
    rep["runtime_ms"] = t["ms"]
    _emit({"family": S.to_json(), "report": rep}, args.report or args.out)
    return 0 if rep["passed"] else 1


def cmd_dominate(args) -> int:
    K = make_kernel(args.kernel, args.m)
    seed = resolve_seed(args.seed)
    if args.grid:
        fs = [_grid(p) for p in args.grid]
    else:
        rng = make_rng(seed, "cli-dominate")
        fs = [generate("indicator", _default_top(1), args.depth, rng) for _ in range(args.m)]
    with timer() as t:
        rep = dominate(K, fs, parse_rational(args.lam))
    out = {
        "lambda": rep["lambda"],
        "family_constants": rep["family_constants"],
        "family_bounds": rep["family_bounds"],
        "c_fit": rep["c_fit"],
        "pass": rep["passed"],
        "seed": seed,
        "runtime_ms": t["ms"],
    }
    _emit(out, args.report)
    return 0 if rep["passed"] else 1


def _weighted_inputs(args, m, rng, S):
    top = frame_cube(S)
    U = TruncatedLattice(top, 64)
    depth = max(args.depth, max(U.rel_generation(Q) for Q in S.cubes))
    fs = [_grid(p) for p in args.grid] if args.grid else [gen.nonneg_function(rng, top, depth) for _ in range(m)]
    ws = [_grid(p) for p in args.weight] if args.weight else None
    return top, depth, fs, ws


def cmd_weighted(args) -> int:
    seed = resolve_seed(args.seed)
    rng = make_rng(seed, "cli-weighted", args.action)
    S = _family(args)
    W = SparseWitness.from_json(_load(args.witness)) if args.witness else sparse_witness(S, largest_feasible_eta(S))
    prof_obj = json.loads(args.profile) if args.profile else {"p": [2, 2], "r": [1, 1]}
    ps = prof_obj["p"]
    if args.action == "maximal":
        top, depth, fs, ws = _weighted_inputs(args, 1, rng, S)
        w = ws[0] if ws else gen.positive_weight(rng, top, depth)
        rep = verify_maximal_theorem(fs[0], w, S, ps[0])
        out = {"lhs": rep["numeric"]["lp_lhs"], "rhs": rep["numeric"]["lp_rhs"],
               "constant_breakdown": {"p_conjugate": conjugate(str(ps[0]))},
               "pass": rep["passed"], "report": rep}
    elif args.action == "kbound":
        prof = ExponentProfile.from_json(prof_obj)
        top, depth, fs, ws = _weighted_inputs(args, prof.m, rng, S)
        if ws is None:
            ws = constrained_weights([gen.positive_weight(rng, top, depth) for _ in range(prof.m - 1)], prof.q_i)
        rep = verify_kbound(S, W, prof, ws, fs)
        rep.pop("factors", None)
        out = {"lhs": rep["numeric"]["lhs"], "rhs": rep["numeric"]["rhs"], "constant_breakdown": rep["constant_breakdown"],
               "pass": rep["passed"], "report": rep}
    else:
        top, depth, fs, ws = _weighted_inputs(args, len(ps), rng, S)
        vs = ws or [gen.positive_weight(rng, top, depth) for _ in ps]
        rep = verify_main_theorem(S, W, vs, ps, fs)
        out = {"lhs": rep["numeric"]["lhs"], "rhs": rep["numeric"]["rhs"], "constant_breakdown": rep["constant_breakdown"],
               "pass": rep["passed"], "report": rep}
    out["seed"] = seed
    _emit(out, args.out)
    return 0 if out["pass"] else 1


def cmd_gen(args) -> int:
    seed = resolve_seed(args.seed)
    rng = make_rng(seed, "cli-gen", args.kind)
    top = parse_cube(args.top) if args.top else _default_top(args.dim)
    if args.kind == "grid":
        params = {}
        if args.alpha is not None:
            params["alpha"] = args.alpha
        f = generate(args.profile, top, args.depth, rng, **params)
        _emit(f.to_json(), args.out)
    else:
        S = gen.random_family(rng, TruncatedLattice(top, args.depth), style=args.style)
        _emit(S.to_json(), args.out)
    return 0


def cmd_suite(args) -> int:
    names = args.checks or ["all"]
    try:
        res = run_suite(args.seed, names, jobs=args.jobs)
    except KeyError as e:
        print(f"unknown check {e.args[0]!r}; known: {', '.join(n for n, _ in CHECKS.values())}", file=sys.stderr)
        return 2
    for r in res["checks"]:
        print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['check']}  ({r['runtime_ms']:.0f} ms)", file=sys.stderr)
    if args.out:
        _emit(res, args.out)
    else:
        _emit(res)
    return 0 if res["passed"] else 1


# --- parser ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dyc", description="Exact dyadic calculus: lattices, Carleson families, sparse bounds.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, out=True):
        sp.add_argument("--seed", type=int, default=None, help="seed (default: $DYC_SEED or 0)")
        if out:
            sp.add_argument("--out", default=None, help="write JSON here instead of stdout")

    sp = sub.add_parser("lattice", help="canonical lattice queries and the multiresolution check")
    sp.add_argument("action", choices=["cube-at", "parent", "children", "member", "verify", "check"])
    sp.add_argument("--top", help="top cube for verify/check, e.g. '-2:4'")
    sp.add_argument("--point")
    sp.add_argument("--gen", type=int, default=0)
    sp.add_argument("--cube")
    sp.add_argument("--dim", type=int, default=1)
    sp.add_argument("--depth", type=int, default=4)
    common(sp)
    sp.set_defaults(fn=cmd_lattice)

    sp = sub.add_parser("three", help="three-lattice labels, containing triples, covers and verification")
    sp.add_argument("action", choices=["verify", "label", "triple", "cover"])
    sp.add_argument("--dim", type=int, default=1)
    sp.add_argument("--depth", type=int, default=4)
    sp.add_argument("--point")
    sp.add_argument("--cube")
    sp.add_argument("--label")
    sp.add_argument("--cubes", nargs="+", default=[], help="cube literals or one JSON file")
    common(sp)
    sp.set_defaults(fn=cmd_three)

    sp = sub.add_parser("forest", help="forest queries on a family")
    sp.add_argument("--family", required=True)
    sp.add_argument("--query", choices=["edges", "roof", "distance", "house"], default="edges")
    sp.add_argument("--cube")
    sp.add_argument("--other")
    sp.add_argument("--depth", type=int, default=4, help="universe depth for house queries")
    common(sp)
    sp.set_defaults(fn=cmd_forest)

    sp = sub.add_parser("carleson", help="Carleson constant, sparse witness, stacks, splitting")
    sp.add_argument("action", choices=["constant", "witness", "stack", "split"])
    sp.add_argument("--family", required=True)
    sp.add_argument("--eta")
    sp.add_argument("--height", type=int, default=1)
    sp.add_argument("-m", type=int, default=2)
    sp.add_argument("--cap", type=int, default=8)
    sp.add_argument("--round-down", action="store_true")
    common(sp)
    sp.set_defaults(fn=cmd_carleson)

    sp = sub.add_parser("osc", help="lambda-oscillation and the dominating family")
    sp.add_argument("action", choices=["value", "family"])
    sp.add_argument("--grid", required=True)
    sp.add_argument("--lambda", dest="lam", default="1/8")
    sp.add_argument("--cube")
    sp.add_argument("--universe-depth", type=int, help="refine the grid to this depth first")
    sp.add_argument("--report")
    common(sp)
    sp.set_defaults(fn=cmd_osc)

    sp = sub.add_parser("dominate", help="sparse domination pipeline")
    sp.add_argument("--kernel", choices=["hilbert", "maxpow"], default="hilbert")
    sp.add_argument("--m", type=int, choices=[1, 2], default=1)
    sp.add_argument("--grid", nargs="+")
    sp.add_argument("--lambda", dest="lam", default="1/8")
    sp.add_argument("--depth", type=int, default=6)
    sp.add_argument("--report")
    common(sp, out=False)
    sp.set_defaults(fn=cmd_dominate)

    sp = sub.add_parser("weighted", help="weighted maximal, sparse-form and L^p checks")
    sp.add_argument("action", choices=["maximal", "kbound", "main"])
    sp.add_argument("--family", required=True)
    sp.add_argument("--witness")
    sp.add_argument("--profile", help='JSON, e.g. \'{"p":[2,2],"r":[1,1]}\'')
    sp.add_argument("--grid", nargs="+", help="function grids (generated if absent)")
    sp.add_argument("--weight", nargs="+", help="weight grids (generated if absent)")
    sp.add_argument("--depth", type=int, default=4)
    common(sp)
    sp.set_defaults(fn=cmd_weighted)

    sp = sub.add_parser("gen", help="seeded instance generators")
    sp.add_argument("kind", choices=["grid", "family"])
    sp.add_argument("--profile", choices=["indicator", "spike", "smooth", "positive"], default="indicator")
    sp.add_argument("--alpha", type=float)
    sp.add_argument("--style", choices=["iid", "paths", "layered"])
    sp.add_argument("--dim", type=int, default=1)
    sp.add_argument("--depth", type=int, default=5)
    sp.add_argument("--top")
    common(sp)
    sp.set_defaults(fn=cmd_gen)

    sp = sub.add_parser("suite", help="run acceptance checks")
    sp.add_argument("checks", nargs="*", help="'all', check numbers or names")
    sp.add_argument("--jobs", type=int, default=1)
    common(sp)
    sp.set_defaults(fn=cmd_suite)
    return p


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except DycError as e:
        print(json.dumps({"error": e.code, "message": str(e)}), file=sys.stderr)
        return 1
    except (OSError, ValueError) as e:
        print(f"dyc: {e}", file=sys.stderr)
        return 2


def main(argv=None) -> None:
    try:
        code = run(argv)
    except SystemExit as e:
        code = e.code if isinstance(e.code, int) else 2
    sys.exit(code)
