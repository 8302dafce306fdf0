"""One PASS/FAIL line per acceptance criterion.

Run under pytest (lines are collected into the terminal summary) or directly
with `python3 tests/test_acceptance.py`.
"""

import sys

import pytest

from capbraid.checks import CRITERIA, run_check


def acceptance_line(res) -> str:
    verdict = "PASS" if res.passed and res.within_budget else "FAIL"
    budget = f"{res.budget:.0f} s budget" if res.budget is not None else "no budget"
    note = "" if res.within_budget else " (over budget)"
    return f"{verdict} [{res.id}] {res.name} ({res.elapsed:.1f} s, {budget}){note}"


@pytest.mark.slow
@pytest.mark.parametrize("key", list(CRITERIA), ids=lambda k: f"criterion_{k}")
def test_acceptance_criterion(key):
    from conftest import ACCEPTANCE_LINES

    res = run_check(key)
    line = acceptance_line(res)
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert res.passed, res.details
    assert res.within_budget, f"{res.elapsed:.1f} s exceeds {res.budget} s"


if __name__ == "__main__":
    failed = 0
    for key in CRITERIA:
        res = run_check(key)
        failed += not (res.passed and res.within_budget)
        print(acceptance_line(res), flush=True)
    sys.exit(1 if failed else 0)
