"""Validation statistics: one-sample KS test, moments with standard errors, occupancy."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Sequence

import numpy as np

KS_TERMS = 100
KS_EPS = 1e-12


@dataclass(frozen=True)
class KSResult:
    statistic: float
    p_value: float
    sample_size: int

    def rejected(self, alpha: float = 0.01) -> bool:
        return self.p_value < alpha

    def to_dict(self) -> dict:
        return asdict(self)


def kolmogorov_sf(lam: float) -> float:
    """Survival function of the Kolmogorov distribution, P(K > lam).

    Uses 2 sum (-1)^(j-1) exp(-2 j^2 lam^2) where it converges quickly and the
    equivalent theta-function form of the CDF for small ``lam``.
    """
    if lam <= 0.0:
        return 1.0
    if lam < 0.6:
        # CDF = sqrt(2 pi)/lam * sum_{j odd} exp(-j^2 pi^2 / (8 lam^2))
        c = math.pi**2 / (8.0 * lam * lam)
        total = 0.0
        for j in range(1, 2 * KS_TERMS, 2):
            term = math.exp(-j * j * c)
            total += term
            if term < KS_EPS * total:
                break
        return min(1.0, max(0.0, 1.0 - math.sqrt(2.0 * math.pi) / lam * total))
    total = 0.0
    for j in range(1, KS_TERMS + 1):
        term = math.exp(-2.0 * j * j * lam * lam)
        total += term if j % 2 else -term
        if term < KS_EPS:
            break
    return min(1.0, max(0.0, 2.0 * total))


def ks_statistic(samples: Sequence[float], cdf: Callable) -> float:
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    if n == 0:
        raise ValueError("the KS test needs at least one sample")
    f = np.asarray(cdf(x), dtype=float)
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))


def ks_test(samples: Sequence[float], cdf: Callable) -> KSResult:
    """One-sample Kolmogorov-Smirnov test with the asymptotic p-value.

    The asymptotic law is accurate for the sample sizes used here
    (n >= 1000); for small n the p-value is only indicative.
    """
    d = ks_statistic(samples, cdf)
    n = len(samples)
    return KSResult(d, kolmogorov_sf(math.sqrt(n) * d), n)


def exponential_cdf(mean: float = 1.0) -> Callable:
    return lambda x: -np.expm1(-np.maximum(np.asarray(x, dtype=float), 0.0) / mean)


def empirical_moment(samples: Sequence[float], power: int = 1) -> tuple[float, float]:
    """Plug-in moment E[X^power] and the plain standard error of the mean."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise ValueError("need at least one sample")
    if power < 1:
        raise ValueError("power must be >= 1")
    y = x**power
    se = float(np.std(y, ddof=1) / math.sqrt(y.size)) if y.size > 1 else math.nan
    return float(np.mean(y)), se


def occupancy_histogram(times: Sequence[float], states: Sequence[int], t_end: float,
                        n_states: int) -> np.ndarray:
    """Fraction of [times[0], t_end) spent in each state.

    ``states[i]`` is held on ``[times[i], times[i+1])``; the last one until ``t_end``.
    """
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=np.int64)
    if t_end <= times[0]:
        raise ValueError("the trajectory must span a positive time")
    hold = np.diff(np.append(times, t_end))
    occ = np.bincount(states, weights=hold, minlength=n_states)
    return occ / occ.sum()


def batch_occupancy(times, states, t_end: float, n_states: int, n_batches: int = 50):
    """Occupancy fractions with batch-means standard errors.

    The window is cut into ``n_batches`` equal batches; returns
    ``(overall fractions, standard errors)``.
    """
    times = np.asarray(times, dtype=float)
    states = np.asarray(states, dtype=np.int64)
    edges = np.linspace(times[0], t_end, n_batches + 1)
    per_batch = np.zeros((n_batches, n_states))
    for b in range(n_batches):
        lo, hi = edges[b], edges[b + 1]
        first = max(int(np.searchsorted(times, lo, side="right")) - 1, 0)
        last = int(np.searchsorted(times, hi, side="left"))
        seg_t = times[first:last].copy()
        seg_t[0] = lo
        per_batch[b] = occupancy_histogram(seg_t, states[first:last], hi, n_states)
    overall = occupancy_histogram(times, states, t_end, n_states)
    se = per_batch.std(axis=0, ddof=1) / math.sqrt(n_batches)
    return overall, se


def tv_distance(p: Sequence[float], q: Sequence[float]) -> float:
    return 0.5 * float(np.sum(np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))))
