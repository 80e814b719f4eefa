"""Forward Moran model with single-crossover recombination and painted chromosomes."""
from __future__ import annotations

import bisect
import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exactarg import stationary_exact, transient_law
from .partitions import IntervalPartition, LociSet, SetPartition, enumerate_partitions, state_index
from .stats import tv_distance


@dataclass(frozen=True)
class Mosaic:
    """A chromosome on [0, R]: ``colors[i]`` covers ``[starts[i], starts[i+1])``.

    Adjacent segments carry distinct colors. Tuples keep mosaics hashable so
    that fixation can be detected by counting distinct chromosomes.
    """
    starts: tuple[float, ...]
    colors: tuple[int, ...]

    def color_at(self, x: float) -> int:
        return self.colors[bisect.bisect_right(self.starts, x) - 1]

    def segments(self, R: float) -> list[tuple[float, float, int]]:
        ends = self.starts[1:] + (R,)
        return list(zip(self.starts, ends, self.colors))

    def partition(self, R: float) -> IntervalPartition:
        return IntervalPartition(self.starts + (R,), self.colors)

    @property
    def n_colors(self) -> int:
        return len(set(self.colors))


def crossover(left: Mosaic, right: Mosaic, u: float) -> Mosaic:
    """Material of ``left`` on [0, u) followed by material of ``right`` on [u, R]."""
    i = bisect.bisect_left(left.starts, u)           # left segments starting before u
    j = bisect.bisect_right(right.starts, u) - 1     # right segment containing u
    starts = list(left.starts[:i])
    colors = list(left.colors[:i])
    if not starts:
        return Mosaic((0.0,) + right.starts[j + 1:], right.colors[j:])
    tail_starts = (u,) + right.starts[j + 1:]
    tail_colors = right.colors[j:]
    if colors[-1] == tail_colors[0]:
        tail_starts = tail_starts[1:]
        colors.pop()
    return Mosaic(tuple(starts) + tail_starts, tuple(colors) + tail_colors)


@dataclass
class Population:
    individuals: list[Mosaic]
    R: float
    rho_N: float
    time: float = 0.0
    events: int = 0

    def __post_init__(self):
        if not 0.0 < self.rho_N * self.R < 1.0:
            raise ValueError(f"need rho_N * R in (0, 1), got {self.rho_N * self.R}")

    @classmethod
    def painted(cls, N: int, R: float, rho_N: float) -> "Population":
        """Individual i is monochromatic with color i."""
        if N < 2:
            raise ValueError("the Moran model needs N >= 2")
        return cls([Mosaic((0.0,), (i,)) for i in range(N)], float(R), float(rho_N))

    @property
    def N(self) -> int:
        return len(self.individuals)

    def colors(self) -> set[int]:
        return {c for m in self.individuals for c in m.colors}

    def is_fixed(self) -> bool:
        first = self.individuals[0]
        return all(m == first for m in self.individuals)


def step_moran(pop: Population, rng: np.random.Generator, dt: float | None = None) -> tuple[int, Mosaic]:
    """Apply one reproduction event in place.

    Events arrive at total rate N, so model time advances by ``dt`` (drawn as
    an exponential with mean 1/N when not given). Returns the replaced index
    and the chromosome it carried before.
    """
    N = pop.N
    pop.time += rng.exponential(1.0 / N) if dt is None else dt
    pop.events += 1
    r = int(rng.integers(N))
    p = int(rng.integers(N - 1))
    if p >= r:
        p += 1
    if rng.random() < pop.rho_N * pop.R:
        u = rng.random() * pop.R
        if rng.random() < 0.5:
            r, p = p, r
        child = crossover(pop.individuals[r], pop.individuals[p], u)
    else:
        child = pop.individuals[r if rng.random() < 0.5 else p]
    v = int(rng.integers(N))
    old = pop.individuals[v]
    pop.individuals[v] = child
    return v, old


@dataclass
class FixationResult:
    fixed: bool
    events: int
    time: float
    mosaic: Mosaic | None
    R: float

    @property
    def n_colors(self) -> int | None:
        return None if self.mosaic is None else self.mosaic.n_colors

    def to_dict(self) -> dict:
        segs = [] if self.mosaic is None else [
            {"start": a, "end": b, "color": c} for a, b, c in self.mosaic.segments(self.R)]
        return {"fixed": self.fixed, "events": self.events, "time": self.time,
                "n_colors": self.n_colors, "segments": segs}


def run_to_fixation(pop: Population, max_events: int, seed) -> FixationResult:
    """Step until every chromosome is structurally identical or the budget runs out.

    Non-fixation is reported through ``fixed=False``, not raised.
    """
    rng = np.random.default_rng(seed)
    counts = Counter(pop.individuals)
    while len(counts) > 1 and pop.events < max_events:
        v, old = step_moran(pop, rng)
        counts[pop.individuals[v]] += 1
        counts[old] -= 1
        if counts[old] == 0:
            del counts[old]
    fixed = len(counts) == 1
    return FixationResult(fixed, pop.events, pop.time, pop.individuals[0] if fixed else None, pop.R)


def advance(pop: Population, t: float, rng: np.random.Generator) -> None:
    """Run events up to model time ``t``; the first event beyond ``t`` is not applied."""
    N = pop.N
    while True:
        dt = rng.exponential(1.0 / N)
        if pop.time + dt > t:
            pop.time = t
            return
        step_moran(pop, rng, dt)


@dataclass
class DualityResult:
    states: tuple[SetPartition, ...]
    empirical: np.ndarray
    limit: np.ndarray
    std_err: np.ndarray
    tv: float
    replicates: int
    rho: float

    def to_dict(self) -> dict:
        return {
            "states": [str(s) for s in self.states],
            "empirical": self.empirical.tolist(),
            "limit": self.limit.tolist(),
            "std_err": self.std_err.tolist(),
            "tv": self.tv,
            "replicates": self.replicates,
            "rho": self.rho,
        }


def duality_check(N: int, R: float, rho_N: float, z: LociSet, t: float | None,
                  replicates: int, seed: int, max_events: int = 10**7) -> DualityResult:
    """Compare the color partition of ``z`` in a sampled individual with the ARG law.

    The forward model is run to model time ``t`` (or to fixation when ``t`` is
    None); the reference is the ARG with rho = rho_N N / 2 at time 2 t / N
    started from the coarsest partition, or its stationary law.
    """
    if z[0] < 0 or z[-1] > R:
        raise ValueError("loci must lie in [0, R]")
    rho = rho_N * N / 2
    states = enumerate_partitions(z.n)
    index = state_index(z.n)
    counts = np.zeros(len(states))
    seeds = np.random.SeedSequence(seed).spawn(replicates)
    for ss in seeds:
        rng = np.random.default_rng(ss)
        pop = Population.painted(N, R, rho_N)
        if t is None:
            res = run_to_fixation(pop, max_events, rng)
            if not res.fixed:
                raise RuntimeError(f"no fixation within {max_events} events")
            who = pop.individuals[0]
        else:
            advance(pop, t, rng)
            who = pop.individuals[int(rng.integers(N))]
        pi = SetPartition(who.color_at(x) for x in z.positions)
        counts[index[pi]] += 1
    emp = counts / replicates
    if t is None:
        limit = np.array(stationary_exact(z, rho).probabilities)
    else:
        limit = transient_law(z, rho, 2.0 * t / N)
    se = np.sqrt(np.maximum(emp * (1 - emp), 1e-300) / replicates)
    return DualityResult(states, emp, limit, se, tv_distance(emp, limit), replicates, rho)


def two_locus_ibd_finite_n(N: int, rho_N: float, d: float) -> float:
    """Exact stationary P(two loci at distance d share a color) in the size-N model.

    Backward in time the pair separates at rate rho_N d and rejoins at rate
    2/N (either lineage is displaced and lands on the other's individual).
    """
    return (2.0 / N) / (2.0 / N + rho_N * d)
