"""Set partitions of a loci set and interval partitions of [0, R).

A :class:`SetPartition` of the indices ``{0, ..., n}`` is stored as a
restricted-growth string (RGS): ``labels[i]`` is the block of index ``i`` and
blocks are numbered in order of their smallest element. The RGS is the
canonical key used everywhere else in the package.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

MAX_N = 9


class SizeLimitError(ValueError):
    """Raised when an exact computation would exceed the supported size."""


@dataclass(frozen=True)
class LociSet:
    positions: tuple[float, ...]

    def __init__(self, positions: Iterable[float]):
        pos = tuple(float(p) for p in positions)
        if len(pos) == 0:
            raise ValueError("a loci set needs at least one position")
        if any(not math.isfinite(p) for p in pos):
            raise ValueError(f"loci must be finite, got {pos}")
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ValueError(f"loci must be strictly increasing, got {pos}")
        object.__setattr__(self, "positions", pos)

    @property
    def n(self) -> int:
        """Largest index; the set has ``n + 1`` loci."""
        return len(self.positions) - 1

    def __len__(self) -> int:
        return len(self.positions)

    def __getitem__(self, i):
        return self.positions[i]

    @property
    def alpha(self) -> float:
        if len(self.positions) < 2:
            return math.inf
        return min(b - a for a, b in zip(self.positions, self.positions[1:]))

    def scaled(self, factor: float) -> "LociSet":
        return LociSet(factor * p for p in self.positions)

    def subset(self, keep: Sequence[int]) -> "LociSet":
        return LociSet(self.positions[i] for i in sorted(keep))

    @classmethod
    def parse(cls, text: str) -> "LociSet":
        try:
            values = [float(tok) for tok in text.split(",") if tok.strip()]
        except ValueError:
            raise ValueError(f"cannot parse loci {text!r}: expected a comma list of numbers") from None
        return cls(values)


def _canonical(labels: Sequence[int]) -> tuple[int, ...]:
    remap: dict[int, int] = {}
    out = []
    for lab in labels:
        if lab not in remap:
            remap[lab] = len(remap)
        out.append(remap[lab])
    return tuple(out)


@dataclass(frozen=True, order=True)
class SetPartition:
    labels: tuple[int, ...]

    def __init__(self, labels: Iterable[int]):
        object.__setattr__(self, "labels", _canonical(tuple(labels)))

    @classmethod
    def from_blocks(cls, blocks: Iterable[Iterable[int]]) -> "SetPartition":
        blocks = [sorted(b) for b in blocks]
        elems = sorted(i for b in blocks for i in b)
        if any(len(b) == 0 for b in blocks):
            raise ValueError("blocks must be nonempty")
        if elems != list(range(len(elems))):
            raise ValueError(f"blocks must partition {{0..n}}, got {blocks}")
        labels = [0] * len(elems)
        for j, b in enumerate(blocks):
            for i in b:
                labels[i] = j
        return cls(labels)

    @classmethod
    def singletons(cls, n: int) -> "SetPartition":
        """The finest partition of ``{0, ..., n}``."""
        return cls(range(n + 1))

    @classmethod
    def coarsest(cls, n: int) -> "SetPartition":
        return cls([0] * (n + 1))

    @classmethod
    def parse(cls, text: str) -> "SetPartition":
        blocks = [[int(tok) for tok in part.split(",")] for part in text.strip().split("/")]
        return cls.from_blocks(blocks)

    @property
    def n(self) -> int:
        return len(self.labels) - 1

    @property
    def num_blocks(self) -> int:
        return max(self.labels) + 1

    @property
    def blocks(self) -> tuple[tuple[int, ...], ...]:
        out: list[list[int]] = [[] for _ in range(self.num_blocks)]
        for i, lab in enumerate(self.labels):
            out[lab].append(i)
        return tuple(tuple(b) for b in out)

    def __str__(self) -> str:
        return "/".join(",".join(str(i) for i in b) for b in self.blocks)

    def __repr__(self) -> str:
        return f"SetPartition({str(self)!r})"

    def refines(self, other: "SetPartition") -> bool:
        """True if every block of ``self`` lies inside a block of ``other``."""
        seen: dict[int, int] = {}
        for a, b in zip(self.labels, other.labels):
            if seen.setdefault(a, b) != b:
                return False
        return True


def encode(pi: SetPartition) -> str:
    return str(pi)


def decode(text: str) -> SetPartition:
    return SetPartition.parse(text)


def bell_numbers(count: int) -> list[int]:
    """First ``count`` Bell numbers B_0, B_1, ... from the Bell triangle."""
    bells = [1]
    row = [1]
    while len(bells) < count:
        new = [row[-1]]
        for v in row:
            new.append(new[-1] + v)
        row = new
        bells.append(row[0])
    return bells[:count]


@lru_cache(maxsize=None)
def _rgs(size: int) -> tuple[tuple[int, ...], ...]:
    out = []
    labels = [0] * size

    def rec(i: int, mx: int) -> None:
        if i == size:
            out.append(tuple(labels))
            return
        for v in range(mx + 2):
            labels[i] = v
            rec(i + 1, max(mx, v))

    if size > 0:
        labels[0] = 0
        rec(1, 0)
    return tuple(out)


@lru_cache(maxsize=None)
def enumerate_partitions(n: int) -> tuple[SetPartition, ...]:
    """All partitions of ``{0, ..., n}`` in lexicographic RGS order.

    The first entry is the single-block partition and the last is the
    all-singleton partition; use :func:`state_index` to look states up.
    """
    if n < 0:
        raise ValueError("n must be >= 0")
    if n > MAX_N:
        raise SizeLimitError(f"n={n} exceeds the enumeration ceiling n <= {MAX_N}")
    return tuple(SetPartition(lab) for lab in _rgs(n + 1))


@lru_cache(maxsize=None)
def state_index(n: int) -> dict[SetPartition, int]:
    return {pi: i for i, pi in enumerate(enumerate_partitions(n))}


def order_of(pi: SetPartition) -> int:
    return len(pi.labels) - pi.num_blocks


def cover_length(pi: SetPartition, z: LociSet) -> float:
    if len(pi.labels) != len(z):
        raise ValueError(f"partition over {len(pi.labels)} indices but {len(z)} loci")
    lo: dict[int, float] = {}
    hi: dict[int, float] = {}
    for i, lab in enumerate(pi.labels):
        lo.setdefault(lab, z[i])
        hi[lab] = z[i]
    return sum(hi[b] - lo[b] for b in lo)


def merge_pairs(pi: SetPartition) -> list[SetPartition]:
    """Every partition obtained by merging one unordered pair of blocks."""
    k = pi.num_blocks
    out = []
    for a, b in itertools.combinations(range(k), 2):
        out.append(SetPartition(a if lab == b else lab for lab in pi.labels))
    return out


def split_moves(pi: SetPartition, z: LociSet) -> list[tuple[SetPartition, float]]:
    """Prefix/suffix fragmentations with their rates at unit recombination rate."""
    if len(pi.labels) != len(z):
        raise ValueError(f"partition over {len(pi.labels)} indices but {len(z)} loci")
    out = []
    new_label = pi.num_blocks
    for block in pi.blocks:
        for j in range(len(block) - 1):
            labels = list(pi.labels)
            for i in block[j + 1:]:
                labels[i] = new_label
            out.append((SetPartition(labels), z[block[j + 1]] - z[block[j]]))
    return out


def restrict(pi: SetPartition, keep: Iterable[int]) -> SetPartition:
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("restriction needs a nonempty index set")
    if keep[0] < 0 or keep[-1] > pi.n:
        raise ValueError(f"indices {keep} out of range for n={pi.n}")
    return SetPartition(pi.labels[i] for i in keep)


def predecessors(pi: SetPartition) -> list[SetPartition]:
    """Partitions from which ``pi`` is reached by a single merge.

    Each block of size m >= 2 can be cut into two nonempty parts in
    2**(m-1) - 1 ways; the part holding the block minimum keeps its label.
    """
    out = []
    new_label = pi.num_blocks
    for block in pi.blocks:
        rest = block[1:]
        for mask in range(1, 1 << len(rest)):
            labels = list(pi.labels)
            for bit, i in enumerate(rest):
                if mask >> bit & 1:
                    labels[i] = new_label
            out.append(SetPartition(labels))
    return out


# ---------------------------------------------------------------------------
# Interval partitions


class IntervalPartition:
    """A right-continuous partition of [0, R) into finitely many segments.

    ``breakpoints`` holds ``0 = x_0 < x_1 < ... < x_m = R`` and ``labels[i]``
    is the block of segment ``[x_i, x_{i+1})``. Labels are stored in
    canonical form (numbered by first appearance from the left), so two
    partitions are equal iff their arrays are equal.
    """

    __slots__ = ("breakpoints", "labels")

    def __init__(self, breakpoints: Sequence[float], labels: Sequence[int]):
        bp = np.array(breakpoints, dtype=float)
        lab = np.asarray(labels, dtype=np.int64)
        if bp.ndim != 1 or lab.ndim != 1 or bp.size != lab.size + 1 or lab.size == 0:
            raise ValueError("need m+1 breakpoints for m >= 1 labelled segments")
        if bp[0] != 0.0:
            raise ValueError("the first breakpoint must be 0")
        if np.any(np.diff(bp) <= 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(lab[1:] == lab[:-1]):
            raise ValueError("adjacent segments must carry distinct labels")
        _, first = np.unique(lab, return_index=True)
        order = np.argsort(first)
        remap = np.empty(order.size, dtype=np.int64)
        remap[order] = np.arange(order.size)
        uniq = np.unique(lab)
        lab = remap[np.searchsorted(uniq, lab)]
        bp.setflags(write=False)
        lab.setflags(write=False)
        self.breakpoints = bp
        self.labels = lab

    @classmethod
    def from_starts(cls, starts, labels, R: float, merge_adjacent: bool = True) -> "IntervalPartition":
        starts = np.asarray(starts, dtype=float)
        labels = np.asarray(labels, dtype=np.int64)
        if merge_adjacent and labels.size > 1:
            keep = np.concatenate(([True], labels[1:] != labels[:-1]))
            starts, labels = starts[keep], labels[keep]
        return cls(np.append(starts, R), labels)

    @classmethod
    def single_block(cls, R: float) -> "IntervalPartition":
        return cls([0.0, R], [0])

    @property
    def R(self) -> float:
        return float(self.breakpoints[-1])

    @property
    def starts(self) -> np.ndarray:
        return self.breakpoints[:-1]

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.breakpoints)

    @property
    def num_segments(self) -> int:
        return int(self.labels.size)

    @property
    def num_blocks(self) -> int:
        return int(self.labels.max()) + 1

    def segment_at(self, x: float) -> int:
        if not 0.0 <= x < self.R:
            raise ValueError(f"position {x} outside [0, {self.R})")
        return int(np.searchsorted(self.breakpoints, x, side="right") - 1)

    def label_at(self, x) -> np.ndarray:
        idx = np.searchsorted(self.breakpoints, np.asarray(x, dtype=float), side="right") - 1
        return self.labels[idx]

    def block_masses(self) -> np.ndarray:
        return np.bincount(self.labels, weights=self.lengths)

    def block_mins(self) -> np.ndarray:
        """Left end of each block, indexed by label."""
        mins = np.empty(self.num_blocks)
        _, first = np.unique(self.labels, return_index=True)
        mins[self.labels[first]] = self.starts[first]
        return mins

    def cover_length(self) -> float:
        ends = self.breakpoints[1:]
        hi = np.zeros(self.num_blocks)
        np.maximum.at(hi, self.labels, ends)
        return float(np.sum(hi - self.block_mins()))

    def restrict_to_loci(self, z: LociSet) -> SetPartition:
        return SetPartition(int(v) for v in self.label_at(z.positions))

    def count_segments(self, a: float, b: float) -> int:
        """Number of segments of the partition restricted to [a, b)."""
        inner = self.starts[1:]
        return 1 + int(np.count_nonzero((inner > a) & (inner < b)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, IntervalPartition):
            return NotImplemented
        return (np.array_equal(self.breakpoints, other.breakpoints)
                and np.array_equal(self.labels, other.labels))

    def __hash__(self) -> int:
        return hash((self.breakpoints.tobytes(), self.labels.tobytes()))

    def __repr__(self) -> str:
        return f"IntervalPartition(R={self.R}, segments={self.num_segments}, blocks={self.num_blocks})"


def metric_d(p1: IntervalPartition, p2: IntervalPartition) -> float:
    """Integral of |phi(p1) - phi(p2)| e^{-x} over [0, R).

    phi maps each point to the minimum of its block. Both are step
    functions on the merged breakpoint grid, so the integral is exact.
    """
    if p1.R != p2.R:
        raise ValueError(f"partitions live on different domains: R={p1.R} vs R={p2.R}")
    grid = np.union1d(p1.breakpoints, p2.breakpoints)
    left = grid[:-1]
    phi1 = p1.block_mins()[p1.label_at(left)]
    phi2 = p2.block_mins()[p2.label_at(left)]
    weights = np.exp(-left) - np.exp(-grid[1:])
    return float(np.sum(np.abs(phi1 - phi2) * weights))
