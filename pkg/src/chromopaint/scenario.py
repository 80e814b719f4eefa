"""Coalescence scenarios, their energies, and the high-recombination approximation.

A scenario is a chain of single merges from the all-singleton partition to a
target. Summing the reciprocal energies of all scenarios gives ``F(target)``;
``F / rho**order`` approximates the stationary probability of the target when
recombination dominates coalescence.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator

from .partitions import (
    LociSet,
    SetPartition,
    SizeLimitError,
    cover_length,
    enumerate_partitions,
    order_of,
    predecessors,
)

DEFAULT_SCENARIO_CAP = 10**7


@dataclass(frozen=True)
class Scenario:
    chain: tuple[SetPartition, ...]

    def __post_init__(self):
        if not self.chain or self.chain[0] != SetPartition.singletons(self.chain[0].n):
            raise ValueError("a scenario starts at the all-singleton partition")
        for k, (a, b) in enumerate(zip(self.chain, self.chain[1:]), start=1):
            if order_of(b) != k or not a.refines(b):
                raise ValueError(f"step {k} is not a single merge: {a} -> {b}")

    @property
    def order(self) -> int:
        return len(self.chain) - 1

    @property
    def target(self) -> SetPartition:
        return self.chain[-1]


def count_scenarios(target: SetPartition) -> int:
    """Number of merge chains ending at ``target``, by recursion on predecessors."""
    memo: dict[SetPartition, int] = {}

    def rec(pi: SetPartition) -> int:
        if order_of(pi) == 0:
            return 1
        if pi not in memo:
            memo[pi] = sum(rec(p) for p in predecessors(pi))
        return memo[pi]

    return rec(target)


def enumerate_scenarios(target: SetPartition, cap: int = DEFAULT_SCENARIO_CAP) -> list[Scenario]:
    if order_of(target) < 1:
        raise ValueError("the target must have order >= 1")
    total = count_scenarios(target)
    if total > cap:
        raise SizeLimitError(f"{total} scenarios exceed the cap of {cap}")

    def rec(pi: SetPartition) -> Iterator[tuple[SetPartition, ...]]:
        if order_of(pi) == 0:
            yield (pi,)
            return
        for p in sorted(predecessors(pi)):
            for head in rec(p):
                yield head + (pi,)

    return [Scenario(chain) for chain in rec(target)]


def energy(s: Scenario, z: LociSet) -> float:
    return math.prod(cover_length(pi, z) for pi in s.chain[1:])


def F_bruteforce(target: SetPartition, z: LociSet, cap: int = DEFAULT_SCENARIO_CAP) -> float:
    return sum(1.0 / energy(s, z) for s in enumerate_scenarios(target, cap))


def F_dp(target: SetPartition, z: LociSet, memo: dict | None = None) -> float:
    """F via the last-step recursion F(pi) = sum(F(pred)) / C(pi), F(singletons) = 1."""
    if order_of(target) < 1:
        raise ValueError("the target must have order >= 1")
    memo = {} if memo is None else memo

    def rec(pi: SetPartition) -> float:
        if order_of(pi) == 0:
            return 1.0
        val = memo.get(pi)
        if val is None:
            val = sum(rec(p) for p in predecessors(pi)) / cover_length(pi, z)
            memo[pi] = val
        return val

    return rec(target)


def F_table(z: LociSet) -> dict[SetPartition, float]:
    """F for every partition of order >= 1, sharing one memo table."""
    memo: dict[SetPartition, float] = {}
    return {pi: F_dp(pi, z, memo) for pi in enumerate_partitions(z.n) if order_of(pi) >= 1}


def approx_stationary(target: SetPartition, z: LociSet, rho: float) -> float:
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    k = order_of(target)
    if k < 1:
        raise ValueError("use approx_table for the all-singleton partition")
    return F_dp(target, z) / rho**k


def approx_table(z: LociSet, rho: float) -> dict[SetPartition, float]:
    """Approximate stationary law; the singleton entry is the normalisation complement."""
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    table = {pi: f / rho ** order_of(pi) for pi, f in F_table(z).items()}
    table[SetPartition.singletons(z.n)] = 1.0 - sum(table.values())
    return {pi: table[pi] for pi in enumerate_partitions(z.n)}


def gamma(n: int, r: int) -> int:
    """Number of unordered block pairs in a partition of order r of n+1 loci."""
    return (n - r) * (n - r + 1) // 2


def hitting_approx(target: SetPartition, z: LociSet, rho: float) -> float:
    k = order_of(target)
    if k < 1:
        raise ValueError("the target must have order >= 1")
    value = cover_length(target, z) * F_dp(target, z) / (rho ** (k - 1) * gamma(z.n, 0))
    if value > 1.0:
        warnings.warn(
            f"approximate hitting probability {value:.3g} > 1: rho={rho} is outside the asymptotic regime",
            RuntimeWarning,
            stacklevel=2,
        )
    return value
