"""Acceptance criteria, one test each, at their stated tolerances.

Each test prints a PASS/FAIL line; the lines are also collected and echoed in
the terminal summary (see conftest.py). Run ``python tests/test_acceptance.py``
to execute the suite without pytest.
"""
import sys

import pytest

from chromopaint import validate

RESULTS: list[validate.Criterion] = []

# criterion id -> (check, runtime budget in seconds or None)
BUDGETS = {
    1: (validate.two_locus_closed_form, 1),
    2: (validate.consistency, 30),
    3: (validate.scaling, 30),
    4: (validate.f_oracle, 120),
    5: (validate.stationary_approx_convergence, 10),
    6: (validate.hitting_convergence, 10),
    7: (validate.ergodic, 120),
    8: (validate.segment_count, 600),
    9: (validate.leftmost_law, None),
    10: (validate.theta_moments, 120),
    11: (validate.theta_exponential, 60),
    12: (validate.moran_checks, 600),
    13: (validate.determinism, 120),
}


def _run(cid: int) -> validate.Criterion:
    check, budget = BUDGETS[cid]
    res = check()
    RESULTS.append(res)
    print(res.line())
    return res


def _assert(res: validate.Criterion, budget):
    assert res.passed, res.line()
    if budget is not None:
        assert res.runtime < budget, f"criterion {res.id} took {res.runtime:.1f}s, budget {budget}s"


@pytest.mark.parametrize("cid", [1, 2, 3, 4, 5, 6])
def test_exact_criteria(cid):
    _assert(_run(cid), BUDGETS[cid][1])


@pytest.mark.parametrize("cid", [7, 8, 10, 11, 12, 13])
def test_monte_carlo_criteria(cid):
    _assert(_run(cid), BUDGETS[cid][1])


@pytest.mark.slow
def test_leftmost_block_law():
    _assert(_run(9), None)


if __name__ == "__main__":
    level = sys.argv[1] if len(sys.argv) > 1 else "full"
    results = validate.run_suite(level)
    sys.exit(0 if all(r.passed for r in results) else 1)
