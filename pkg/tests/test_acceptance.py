"""The fifteen acceptance criteria, each run once at full size.

Run alone with ``pytest tests/test_acceptance.py -v``; a summary with one
PASS/FAIL line per criterion is printed at the end of the session.
"""

import json
import os
import time

import pytest

from dyc.report import to_json
from dyc.suite import CHECKS

from conftest import ACCEPTANCE_LINES

SEED = int(os.environ.get("DYC_SEED", "1"))
# wall-clock budgets in seconds where the criterion states one
LIMITS = {1: 30, 10: 300, 15: 600}


def _summary(rep) -> str:
    if rep["passed"]:
        return ""
    cx = rep.get("counterexample")
    return " " + json.dumps(json.loads(to_json(cx)), sort_keys=True)[:300]


@pytest.mark.slow
@pytest.mark.parametrize("k", sorted(CHECKS), ids=[f"{k:02d}_{CHECKS[k][0]}" for k in sorted(CHECKS)])
def test_criterion(k):
    label, fn = CHECKS[k]
    t0 = time.perf_counter()
    rep = fn(SEED)
    secs = time.perf_counter() - t0
    limit = LIMITS.get(k)
    in_time = limit is None or secs < limit
    ok = rep["passed"] and in_time
    budget = f" (limit {limit} s)" if limit else ""
    ACCEPTANCE_LINES.append(f"criterion {k:02d} {label:<20} {'PASS' if ok else 'FAIL'}  {secs:7.1f} s{budget}{_summary(rep)}")
    assert rep["passed"], to_json(rep.get("counterexample"))
    assert in_time, f"{secs:.1f} s exceeds {limit} s"
