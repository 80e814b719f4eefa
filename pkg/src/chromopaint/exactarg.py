"""Exact generator, stationary law and hitting probabilities of the finite-loci ARG."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .partitions import (
    LociSet,
    SetPartition,
    SizeLimitError,
    enumerate_partitions,
    merge_pairs,
    restrict,
    split_moves,
    state_index,
)

MAX_LOCI = 8


class SingularGeneratorError(RuntimeError):
    pass


@dataclass(frozen=True)
class GeneratorMatrix:
    states: tuple[SetPartition, ...]
    rates: np.ndarray
    rho: float
    z: LociSet

    def index(self, pi: SetPartition) -> int:
        return state_index(self.z.n)[pi]

    def rate(self, src: SetPartition, dst: SetPartition) -> float:
        return float(self.rates[self.index(src), self.index(dst)])


@dataclass(frozen=True)
class StationaryTable:
    states: tuple[SetPartition, ...]
    probabilities: np.ndarray
    rho: float
    z: LociSet
    residual: float

    def __getitem__(self, pi: SetPartition) -> float:
        return float(self.probabilities[state_index(self.z.n)[pi]])

    def as_dict(self) -> dict[SetPartition, float]:
        return {pi: float(p) for pi, p in zip(self.states, self.probabilities)}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["partition", "probability"])
        for pi, p in zip(self.states, self.probabilities):
            writer.writerow([str(pi), f"{p:.17g}"])
        return buf.getvalue()


def _check(z: LociSet, rho: float) -> None:
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if len(z) > MAX_LOCI:
        raise SizeLimitError(f"{len(z)} loci exceeds the exact-solver ceiling of {MAX_LOCI}")


def build_generator(z: LociSet, rho: float) -> GeneratorMatrix:
    _check(z, rho)
    states = enumerate_partitions(z.n)
    index = state_index(z.n)
    q = np.zeros((len(states), len(states)))
    for i, pi in enumerate(states):
        for succ in merge_pairs(pi):
            q[i, index[succ]] += 1.0
        for succ, gap in split_moves(pi, z):
            q[i, index[succ]] += rho * gap
        q[i, i] = -q[i].sum()
    q.setflags(write=False)
    return GeneratorMatrix(states, q, float(rho), z)


def solve_stationary(q: np.ndarray) -> np.ndarray:
    """Solve mu Q = 0 with sum(mu) = 1 by LU on the transposed system.

    The last balance equation is replaced by the normalisation row.
    """
    size = q.shape[0]
    a = q.T.copy()
    a[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    try:
        lu, piv = scipy.linalg.lu_factor(a, check_finite=True)
    except (ValueError, np.linalg.LinAlgError) as exc:
        raise SingularGeneratorError(str(exc)) from exc
    if np.any(np.diag(lu) == 0.0):
        raise SingularGeneratorError("generator has no unique stationary law")
    mu = scipy.linalg.lu_solve((lu, piv), rhs)
    # one step of iterative refinement keeps tiny entries accurate
    mu += scipy.linalg.lu_solve((lu, piv), rhs - a @ mu)
    return mu


def stationary_exact(z: LociSet, rho: float) -> StationaryTable:
    gen = build_generator(z, rho)
    mu = solve_stationary(gen.rates)
    residual = float(np.max(np.abs(mu @ gen.rates)))
    mu.setflags(write=False)
    return StationaryTable(gen.states, mu, gen.rho, z, residual)


def transient_law(z: LociSet, rho: float, t: float, start: SetPartition | None = None) -> np.ndarray:
    """Law of the ARG at time ``t``, started (by default) from the coarsest partition."""
    gen = build_generator(z, rho)
    start = SetPartition.coarsest(z.n) if start is None else start
    p0 = np.zeros(len(gen.states))
    p0[gen.index(start)] = 1.0
    if t == 0:
        return p0
    return p0 @ scipy.linalg.expm(gen.rates * t)


def pushforward(table: StationaryTable, keep: Sequence[int]) -> dict[SetPartition, float]:
    out: dict[SetPartition, float] = {}
    for pi, p in zip(table.states, table.probabilities):
        key = restrict(pi, keep)
        out[key] = out.get(key, 0.0) + float(p)
    return out


def check_consistency(z: LociSet, keep: Iterable[int], rho: float) -> float:
    """Max |Rest_keep * mu(z) - mu(z restricted)| over the states of the subset."""
    keep = sorted(set(keep))
    full = stationary_exact(z, rho)
    pushed = pushforward(full, keep)
    direct = stationary_exact(z.subset(keep), rho)
    return max(abs(pushed.get(pi, 0.0) - p) for pi, p in direct.as_dict().items())


def check_scaling(z: LociSet, rho: float, lam: float) -> float:
    """Max entrywise gap between mu(rho, z), mu(1, rho z) and mu(rho/lam, lam z)."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    base = stationary_exact(z, rho).probabilities
    unit = stationary_exact(z.scaled(rho), 1.0).probabilities
    moved = stationary_exact(z.scaled(lam), rho / lam).probabilities
    return float(max(np.max(np.abs(base - unit)), np.max(np.abs(base - moved))))


def jump_chain(q: np.ndarray) -> np.ndarray:
    out = q.copy()
    np.fill_diagonal(out, 0.0)
    totals = out.sum(axis=1)
    return out / totals[:, None]


def hitting_probability(z: LociSet, rho: float, target: SetPartition) -> float:
    """P(jump chain from the singletons visits ``target`` before returning)."""
    gen = build_generator(z, rho)
    origin = gen.index(SetPartition.singletons(z.n))
    if len(target.labels) != len(z):
        raise ValueError("target is not a partition of the loci")
    goal = gen.index(target)
    if goal == origin:
        raise ValueError("target must differ from the all-singleton partition")
    p = jump_chain(gen.rates)
    inner = [i for i in range(len(gen.states)) if i not in (origin, goal)]
    h = np.zeros(len(gen.states))
    h[goal] = 1.0
    if inner:
        a = np.eye(len(inner)) - p[np.ix_(inner, inner)]
        h[inner] = np.linalg.solve(a, p[inner, goal])
    return float(p[origin] @ h)
