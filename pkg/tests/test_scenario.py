import math
from fractions import Fraction

import numpy as np
import pytest

from chromopaint import exactarg, scenario
from chromopaint.partitions import LociSet, SetPartition, SizeLimitError, enumerate_partitions, order_of

Z3 = LociSet([0.0, 1.0, 3.0])


def test_hand_computed_F():
    # first merge {0,1} (C=1), {1,2} (C=2) or {0,2} (C=3); final C=3
    target = SetPartition.coarsest(2)
    expected = float(Fraction(1, 3) * (1 + Fraction(1, 2) + Fraction(1, 3)))
    assert expected == pytest.approx(11 / 18)
    assert scenario.F_dp(target, Z3) == pytest.approx(expected, rel=1e-15)
    assert scenario.F_bruteforce(target, Z3) == pytest.approx(expected, rel=1e-15)
    assert scenario.F_dp(SetPartition.parse("0,2/1"), Z3) == pytest.approx(1 / 3)


@pytest.mark.parametrize("n", range(1, 6))
def test_scenario_count_for_full_merge(n):
    # maximal chains of the partition lattice on n+1 points: (n+1)! n! / 2^n
    expected = math.factorial(n + 1) * math.factorial(n) // 2**n
    assert scenario.count_scenarios(SetPartition.coarsest(n)) == expected
    if n <= 4:
        assert len(scenario.enumerate_scenarios(SetPartition.coarsest(n))) == expected


def test_scenario_validation_and_cap():
    s = scenario.enumerate_scenarios(SetPartition.parse("0,1/2"))
    assert len(s) == 1 and s[0].order == 1 and s[0].target == SetPartition.parse("0,1/2")
    with pytest.raises(ValueError):
        scenario.Scenario((SetPartition.singletons(2), SetPartition.coarsest(2)))
    with pytest.raises(ValueError):
        scenario.Scenario((SetPartition.coarsest(2),))
    with pytest.raises(SizeLimitError):
        scenario.enumerate_scenarios(SetPartition.coarsest(5), cap=100)
    with pytest.raises(ValueError):
        scenario.enumerate_scenarios(SetPartition.singletons(3))


def test_F_dp_matches_bruteforce_on_random_loci():
    rng = np.random.default_rng(0)
    for _ in range(5):
        z = LociSet(np.sort(rng.uniform(0, 5, 5)))
        memo = {}
        for pi in enumerate_partitions(4):
            if order_of(pi) >= 1:
                assert scenario.F_dp(pi, z, memo) == pytest.approx(scenario.F_bruteforce(pi, z), rel=1e-12)


def test_two_locus_approximation():
    d, rho = 1.0, 100.0
    z = LociSet([0.0, d])
    approx = scenario.approx_stationary(SetPartition.coarsest(1), z, rho)
    assert approx == pytest.approx(1 / (rho * d))
    exact = exactarg.stationary_exact(z, rho)[SetPartition.coarsest(1)]
    assert abs(exact - approx) / approx == pytest.approx(1 / (1 + rho * d), rel=1e-12)
    table = scenario.approx_table(z, rho)
    assert sum(table.values()) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        scenario.approx_stationary(SetPartition.singletons(1), z, rho)


def test_approximation_improves_with_rho():
    errs = []
    for rho in (10.0, 100.0, 1000.0):
        exact = exactarg.stationary_exact(Z3, rho)
        approx = scenario.approx_table(Z3, rho)
        errs.append(max(abs(exact[p] - a) / a for p, a in approx.items()))
    assert errs[0] > errs[1] > errs[2]


def test_gamma():
    assert [scenario.gamma(4, r) for r in range(5)] == [10, 6, 3, 1, 0]


def test_hitting_approx_two_loci_is_exact():
    z = LociSet([0.0, 2.5])
    assert scenario.hitting_approx(SetPartition.coarsest(1), z, 40.0) == pytest.approx(1.0)


def test_hitting_approx_order_one_is_rho_free():
    # first jump from the singletons is a merge, uniform over the pairs
    for text in ("0,1/2", "0/1,2"):
        t = SetPartition.parse(text)
        assert scenario.hitting_approx(t, Z3, 10.0) == pytest.approx(scenario.hitting_approx(t, Z3, 1e4))


def test_hitting_approx_warns_outside_regime():
    with pytest.warns(RuntimeWarning):
        scenario.hitting_approx(SetPartition.coarsest(2), Z3, 0.01)
