"""Uniform verification reports and deterministic JSON output."""

from __future__ import annotations

import json
import math
import time
from contextlib import contextmanager
from fractions import Fraction

from .dyadic import DyadicRational, fmt_rational

FIELDS = ("check", "scope", "exact", "numeric", "passed", "counterexample", "seed", "runtime_ms")


def make_report(check, scope=None, passed=True, exact=None, numeric=None, counterexample=None, seed=None, runtime_ms=None, **extra) -> dict:
    rep = {
        "check": check,
        "scope": scope or {},
        "exact": exact or {},
        "numeric": numeric or {},
        "passed": bool(passed),
        "counterexample": counterexample,
        "seed": seed,
        "runtime_ms": runtime_ms,
    }
    rep.update(extra)
    return rep


@contextmanager
def timer():
    box = {}
    t0 = time.perf_counter()
    try:
        yield box
    finally:
        box["ms"] = round((time.perf_counter() - t0) * 1000.0, 3)


def _plain(obj):
    if isinstance(obj, (Fraction, DyadicRational)):
        return fmt_rational(obj)
    if isinstance(obj, float):
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        if math.isnan(obj):
            return "nan"
        return obj
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if hasattr(obj, "to_json"):
        return _plain(obj.to_json())
    if hasattr(obj, "item"):
        return _plain(obj.item())
    return obj


def to_json(obj, drop_runtime: bool = False) -> str:
    data = _plain(obj)
    if drop_runtime:
        data = _strip_runtime(data)
    return json.dumps(data, sort_keys=True, indent=2, ensure_ascii=False)


def _strip_runtime(data):
    if isinstance(data, dict):
        return {k: _strip_runtime(v) for k, v in data.items() if k != "runtime_ms"}
    if isinstance(data, list):
        return [_strip_runtime(v) for v in data]
    return data
