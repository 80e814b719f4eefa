import math

import numpy as np
import pytest
from scipy.stats import kstwobign

from chromopaint import stats


@pytest.mark.parametrize("lam", [0.05, 0.2, 0.45, 0.59, 0.6, 0.61, 0.8, 1.0, 1.36, 1.63, 2.5, 4.0])
def test_kolmogorov_sf_against_scipy(lam):
    assert stats.kolmogorov_sf(lam) == pytest.approx(kstwobign.sf(lam), abs=1e-12)


def test_kolmogorov_sf_edges():
    assert stats.kolmogorov_sf(0.0) == 1.0
    assert stats.kolmogorov_sf(-1.0) == 1.0
    assert 0.0 <= stats.kolmogorov_sf(10.0) < 1e-80
    # continuity across the branch switch
    assert abs(stats.kolmogorov_sf(0.6 - 1e-12) - stats.kolmogorov_sf(0.6)) < 1e-10


def test_ks_statistic_hand_value():
    # uniform cdf, samples 0.1 and 0.9: D = max(0.5 - 0.1, 1 - 0.9, 0.1, 0.9 - 0.5) = 0.4
    assert stats.ks_statistic([0.9, 0.1], lambda x: np.clip(x, 0, 1)) == pytest.approx(0.4)
    with pytest.raises(ValueError):
        stats.ks_statistic([], lambda x: x)


def test_ks_test_accepts_and_rejects():
    rng = np.random.default_rng(1)
    good = rng.exponential(2.0, 5000)
    assert not stats.ks_test(good, stats.exponential_cdf(2.0)).rejected(0.01)
    assert stats.ks_test(good, stats.exponential_cdf(1.0)).rejected(0.01)
    res = stats.ks_test(good, stats.exponential_cdf(2.0))
    assert res.sample_size == 5000 and set(res.to_dict()) == {"statistic", "p_value", "sample_size"}


def test_ks_p_values_roughly_uniform_under_null():
    rng = np.random.default_rng(2)
    p = np.array([stats.ks_test(rng.exponential(1.0, 2000), stats.exponential_cdf()).p_value for _ in range(300)])
    assert 0.03 < np.mean(p < 0.1) < 0.18
    assert 0.4 < p.mean() < 0.6


def test_empirical_moment():
    mean, se = stats.empirical_moment([1.0, 2.0, 3.0], 2)
    assert mean == pytest.approx(14 / 3)
    assert se == pytest.approx(np.std([1, 4, 9], ddof=1) / math.sqrt(3))
    assert math.isnan(stats.empirical_moment([2.0], 1)[1])
    with pytest.raises(ValueError):
        stats.empirical_moment([], 1)
    with pytest.raises(ValueError):
        stats.empirical_moment([1.0], 0)


def test_occupancy_histogram():
    occ = stats.occupancy_histogram([0.0, 1.0, 4.0], [0, 2, 0], 5.0, 3)
    assert occ == pytest.approx([0.4, 0.0, 0.6])
    with pytest.raises(ValueError):
        stats.occupancy_histogram([1.0], [0], 1.0, 1)


def test_batch_occupancy_two_state_chain():
    # alternating chain with Exp(1) and Exp(1/3) holding times: occupancy 1/4, 3/4
    rng = np.random.default_rng(4)
    hold = np.where(np.arange(200_000) % 2 == 0, rng.exponential(1.0, 200_000), rng.exponential(3.0, 200_000))
    times = np.concatenate(([0.0], np.cumsum(hold)[:-1]))
    states = np.arange(200_000) % 2
    t_end = times[-1]
    occ, se = stats.batch_occupancy(times, states, t_end, 2)
    assert occ.sum() == pytest.approx(1.0)
    assert np.all(np.abs(occ - [0.25, 0.75]) < 4 * se)
    assert np.all(se > 0)


def test_tv_distance():
    assert stats.tv_distance([0.5, 0.5], [1.0, 0.0]) == 0.5
    assert stats.tv_distance([0.2, 0.8], [0.2, 0.8]) == 0.0
