import json
import math

import numpy as np
import pytest

from chromopaint import stats, thetainfty


def test_moment_formula():
    assert thetainfty.theta_moment([(0, 1)], [1]) == 1
    assert thetainfty.theta_moment([(0, 1)], [2]) == 2
    assert thetainfty.theta_moment([(0, 1)], [3]) == 6
    assert thetainfty.theta_moment([(0.5, 1)], [1]) == 0.5
    assert thetainfty.theta_moment([(0, 0.5), (0.5, 1)], [1, 1]) == 0.25
    assert thetainfty.theta_moment([(0.2, 0.6)], [2]) == pytest.approx(2 * 0.6 * 0.4)


def test_moment_formula_errors():
    with pytest.raises(ValueError):
        thetainfty.theta_moment([(0, 0.6), (0.5, 1)], [1, 1])
    with pytest.raises(ValueError):
        thetainfty.theta_moment([(0, 1)], [0])
    with pytest.raises(ValueError):
        thetainfty.theta_moment([(0, 1.5)], [1])
    with pytest.raises(ValueError):
        thetainfty.theta_moment([(0, 1)], [1, 2])


def test_mgf_formula():
    assert thetainfty.theta_mgf(0, 1, 0.5) == pytest.approx(2.0)
    assert thetainfty.theta_mgf(0.3, 0.3, 5.0) == 1.0
    # derivative at 0 is the first moment b - a
    h = 1e-6
    assert (thetainfty.theta_mgf(0.2, 0.7, h) - 1) / h == pytest.approx(0.5, rel=1e-5)
    with pytest.raises(ValueError):
        thetainfty.theta_mgf(0, 0.5, 2.0)
    with pytest.raises(ValueError):
        thetainfty.theta_mgf(0.6, 0.5, 0.1)


def test_sample_structure():
    s = thetainfty.sample_theta_infty(1e-4, seed=5)
    assert np.all((s.x > 1e-4) & (s.x <= 1.0))
    assert np.all(s.y >= 0)
    assert s.mass(0, 1) == pytest.approx(s.total)
    assert s.mass(0, 0.5) + s.mass(0.5, 1) == pytest.approx(s.total)
    assert len(s) == s.x.size
    assert len(json.loads(s.to_json())) == len(s)
    assert thetainfty.sample_theta_infty(1e-4, seed=5).to_json() == s.to_json()
    with pytest.raises(ValueError):
        thetainfty.sample_theta_infty(0.0)


def test_atom_count_is_poisson_log():
    counts = [len(thetainfty.sample_theta_infty(1e-3, seed=i)) for i in range(3000)]
    lam = math.log(1e3)
    assert np.mean(counts) == pytest.approx(lam, abs=4 * math.sqrt(lam / 3000))
    assert np.var(counts) == pytest.approx(lam, rel=0.1)


def test_vectorised_sampler_matches_scalar_law():
    # same law, different streams: compare means of the two samplers
    vec = thetainfty.sample_masses([(0, 1)], 20_000, 1e-6, seed=1)[:, 0]
    scal = np.array([thetainfty.sample_theta_infty(1e-6, seed=i).total for i in range(20_000)])
    diff = vec.mean() - scal.mean()
    se = math.hypot(vec.std() / math.sqrt(vec.size), scal.std() / math.sqrt(scal.size))
    assert abs(diff) < 4 * se


@pytest.mark.parametrize("a,b,t", [(0.0, 1.0, 0.3), (0.5, 1.0, 0.4), (0.0, 0.5, 0.8)])
def test_mgf_monte_carlo(a, b, t):
    # t < 1/(2b) keeps the variance of exp(t theta) finite
    m = thetainfty.sample_masses([(a, b)], 100_000, 1e-6, seed=3)[:, 0]
    mean, se = stats.empirical_moment(np.exp(t * m), 1)
    assert abs(mean - thetainfty.theta_mgf(a, b, t)) < 4 * se


def test_truncation_loses_x_trunc_in_mean():
    m = thetainfty.sample_masses([(0, 1)], 200_000, 0.1, seed=8)[:, 0]
    mean, se = stats.empirical_moment(m, 1)
    assert abs(mean - 0.9) < 4 * se
