"""Acceptance gate: every numbered criterion must pass inside its budget.

Each test prints the criterion's one-line verdict (visible with -s, and in
the captured output on failure); the assertion message carries the failing
sub-checks so a red test names exactly what broke.
"""

import pytest

from coarsecalc import acceptance

_IDS = [num for num, _, _, _ in acceptance.CRITERIA]


@pytest.mark.parametrize("cid", _IDS)
def test_criterion(cid):
    result = acceptance.run_criterion(cid)
    print(result.line())
    if result.discrepancy:
        print(f"    note: {result.discrepancy}")
    failing = sorted(k for k, ok in result.checks.items() if not ok)
    assert result.passed, f"{result.line()} failing checks: {failing}"


def test_all_criteria_registered():
    assert _IDS == list(range(1, 10))
