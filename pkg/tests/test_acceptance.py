"""Acceptance suite: one test per criterion, each at its stated tolerance.

A PASS/FAIL line per criterion is printed at the end of the session (see
``conftest.py``).  Criteria 7 and 8 are expected to fail at the required
graph sizes; the analysis lives with the very-small-regime oracle demo.
"""
import pytest

from fppkn import acceptance

# criterion -> runtime budget in seconds, None where none is stated
BUDGETS = {1: 120, 2: 600, 3: 300, 4: None, 5: 60, 6: 600, 7: 1800, 8: 2700, 9: 2700, 10: 1, 11: None}

RESULTS = {}


def _line(i, ok, checks, secs):
    bad = [c for c in checks if not c.ok]
    shown = bad[:3] if bad else checks[-1:]
    detail = "; ".join(f"{c.id}: observed={c.observed} expected={c.expected}" for c in shown)
    return f"{'PASS' if ok else 'FAIL'} criterion {i:2d} ({len(checks)} checks, {secs:.1f}s) {detail}"


@pytest.mark.parametrize("i", sorted(acceptance.CRITERIA))
def test_criterion(i):
    ok, checks, secs = acceptance.run_criterion(i)
    budget = BUDGETS[i]
    within = budget is None or secs <= budget
    RESULTS[i] = _line(i, ok and within, checks, secs) + ("" if within else f" [over {budget}s budget]")
    failed = [f"{c.id}: observed={c.observed} expected={c.expected} tol={c.tolerance}" for c in checks if not c.ok]
    assert not failed, "\n".join(failed)
    assert within, f"took {secs:.1f}s, budget {budget}s"


def test_golden_summary():
    checks = acceptance._golden_check()
    RESULTS["golden"] = f"{'PASS' if checks[0].ok else 'FAIL'} golden summary ({checks[0].observed})"
    assert checks[0].ok
