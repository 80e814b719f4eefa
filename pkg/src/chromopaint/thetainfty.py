"""The limiting point process of IBD-to-0 material on the log scale.

Atoms (x, y) form a Poisson process on (0, 1] x (0, inf) with intensity
x**-2 exp(-y/x) dx dy: positions follow the scale-invariant process of
intensity dx/x, and given x the mass y is exponential with mean x.
Sampling is truncated to x > x_trunc; the expected mass lost below the cut is
exactly x_trunc.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

DEFAULT_TRUNC = 1e-6


@dataclass(frozen=True)
class AtomMeasure:
    x: np.ndarray
    y: np.ndarray

    def mass(self, a: float = 0.0, b: float = 1.0) -> float:
        """Total mass of atoms with a < x <= b."""
        return float(np.sum(self.y[(self.x > a) & (self.x <= b)]))

    @property
    def total(self) -> float:
        return float(np.sum(self.y))

    def __len__(self) -> int:
        return int(self.x.size)

    def to_json(self) -> str:
        return json.dumps([{"x": float(a), "y": float(b)} for a, b in zip(self.x, self.y)])


def _check_trunc(x_trunc: float) -> None:
    if not 0.0 < x_trunc < 1.0:
        raise ValueError(f"x_trunc must lie in (0, 1), got {x_trunc}")


def sample_theta_infty(x_trunc: float = DEFAULT_TRUNC, seed=None) -> AtomMeasure:
    _check_trunc(x_trunc)
    rng = np.random.default_rng(seed)
    count = rng.poisson(math.log(1.0 / x_trunc))
    x = x_trunc ** rng.random(count)      # density 1/(x log(1/x_trunc)) on (x_trunc, 1]
    y = -x * np.log1p(-rng.random(count))
    return AtomMeasure(x, y)


def sample_masses(windows: Sequence[tuple[float, float]], n: int,
                  x_trunc: float = DEFAULT_TRUNC, seed=None) -> np.ndarray:
    """Masses of ``n`` independent samples on each window (a, b]; shape (n, windows).

    Vectorised equivalent of calling :func:`sample_theta_infty` ``n`` times.
    """
    _check_trunc(x_trunc)
    rng = np.random.default_rng(seed)
    counts = rng.poisson(math.log(1.0 / x_trunc), size=n)
    owner = np.repeat(np.arange(n), counts)
    x = x_trunc ** rng.random(owner.size)
    y = -x * np.log1p(-rng.random(owner.size))
    out = np.empty((n, len(windows)))
    for w, (a, b) in enumerate(windows):
        sel = (x > a) & (x <= b)
        out[:, w] = np.bincount(owner[sel], weights=y[sel], minlength=n)
    return out


def theta_moment(intervals: Sequence[tuple[float, float]], powers: Sequence[int]) -> float:
    """E[prod theta(a_i, b_i)^n_i] = prod n_i! b_i^(n_i - 1) (b_i - a_i) for disjoint intervals."""
    if len(intervals) != len(powers):
        raise ValueError("need one power per interval")
    ivs = sorted((float(a), float(b)) for a, b in intervals)
    for a, b in ivs:
        if not 0.0 <= a <= b <= 1.0:
            raise ValueError(f"interval ({a}, {b}) must lie in [0, 1]")
    for (a1, b1), (a2, b2) in zip(ivs, ivs[1:]):
        if a2 < b1 and a2 < b2 and a1 < b1:
            raise ValueError(f"intervals ({a1}, {b1}) and ({a2}, {b2}) overlap")
    out = 1.0
    for (a, b), n in zip(intervals, powers):
        if int(n) != n or n < 1:
            raise ValueError(f"powers must be positive integers, got {n}")
        out *= math.factorial(int(n)) * b ** (n - 1) * (b - a)
    return out


def theta_mgf(a: float, b: float, t: float) -> float:
    """E[exp(t theta(a, b))] = (1 - t a) / (1 - t b), finite for t < 1/b."""
    if not 0.0 <= a <= b <= 1.0:
        raise ValueError(f"need 0 <= a <= b <= 1, got a={a}, b={b}")
    if a == b:
        return 1.0
    if t * b >= 1.0:
        raise ValueError(f"the moment generating function diverges for t >= 1/b = {1 / b}")
    return (1.0 - t * a) / (1.0 - t * b)
