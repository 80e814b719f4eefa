"""Event-driven simulation of the finite-loci ARG and of the interval process on [0, R).

Seeding: every replicate ``i`` of a run with base seed ``s`` draws its
randomness from ``SeedSequence(s, spawn_key=(i,))``, so results do not depend
on how replicates are scheduled across worker processes.
"""
from __future__ import annotations

import math
import multiprocessing
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import _kernel
from .exactarg import build_generator, jump_chain
from .partitions import IntervalPartition, LociSet, SetPartition


@dataclass(frozen=True)
class SimConfig:
    rho: float
    R: float
    t_burn: float = 20.0
    t_max: float = 20.0
    seed: int = 0
    replicate_index: int = 0

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError(f"rho must be positive, got {self.rho}")
        if not self.R > 0:
            raise ValueError(f"R must be positive, got {self.R}")
        if not 0 <= self.t_burn <= self.t_max:
            raise ValueError(f"need 0 <= t_burn <= t_max, got {self.t_burn}, {self.t_max}")


def derive_seed(base: int, index: int) -> int:
    """32-bit seed for replicate ``index`` of a run with base seed ``base``."""
    return int(np.random.SeedSequence(int(base), spawn_key=(int(index),)).generate_state(1)[0])


# ---------------------------------------------------------------------------
# finite loci


@dataclass(frozen=True)
class ArgTrajectory:
    """Right-continuous path: ``states[idx[i]]`` holds on ``[times[i], times[i+1])``."""
    states: tuple[SetPartition, ...]
    times: np.ndarray
    idx: np.ndarray
    t_max: float

    def __iter__(self):
        for t, i in zip(self.times, self.idx):
            yield float(t), self.states[i]

    def state_at(self, t: float) -> SetPartition:
        return self.states[self.idx[np.searchsorted(self.times, t, side="right") - 1]]


def simulate_arg(z: LociSet, rho: float, start: SetPartition, t_max: float, seed: int,
                 chunk: int = 1 << 16) -> ArgTrajectory:
    """Gillespie simulation of the ARG on ``z`` over ``[0, t_max]``."""
    if not rho > 0:
        raise ValueError(f"rho must be positive, got {rho}")
    if not t_max > 0:
        raise ValueError(f"t_max must be positive, got {t_max}")
    gen = build_generator(z, rho)
    q = gen.rates
    out_rate = -np.diag(q)
    cum = np.cumsum(jump_chain(q), axis=1)
    cum[:, -1] = 1.0
    rng = np.random.default_rng(seed)

    times = [0.0]
    idx = [gen.index(start)]
    t = 0.0
    cur = idx[0]
    while True:
        expo = rng.standard_exponential(chunk)
        unif = rng.random(chunk)
        for e, u in zip(expo, unif):
            t += e / out_rate[cur]
            if t >= t_max:
                return ArgTrajectory(gen.states, np.array(times), np.array(idx), float(t_max))
            cur = int(np.searchsorted(cum[cur], u, side="right"))
            times.append(t)
            idx.append(cur)


# ---------------------------------------------------------------------------
# interval process


@dataclass
class IntervalRun:
    partition: IntervalPartition
    n_events: int
    max_drift: float


def _capacity(rho: float, R: float, m: int) -> int:
    return int(4 * (rho * R + m) + 1024)


def run_interval(start: IntervalPartition, rho: float, t_end: float, seed: int) -> IntervalRun:
    cap = _capacity(rho, start.R, start.num_segments)
    starts = np.ascontiguousarray(start.starts, dtype=float)
    labels = np.ascontiguousarray(start.labels, dtype=np.int64)
    while True:
        status, out_s, out_l, n_events, drift = _kernel.run_interval(
            starts, labels, float(start.R), float(rho), float(t_end), int(seed), cap, cap)
        if status == 0:
            break
        cap *= 2
    part = IntervalPartition.from_starts(out_s, out_l, start.R, merge_adjacent=False)
    return IntervalRun(part, int(n_events), float(drift))


def simulate_interval(cfg: SimConfig, start: IntervalPartition | None = None) -> IntervalPartition:
    """State of the interval process at ``cfg.t_max``."""
    start = IntervalPartition.single_block(cfg.R) if start is None else start
    if start.R != cfg.R:
        raise ValueError("start partition and config disagree on R")
    seed = derive_seed(cfg.seed, cfg.replicate_index)
    return run_interval(start, cfg.rho, cfg.t_max, seed).partition


def merge_blocks(p: IntervalPartition, a: int, b: int) -> IntervalPartition:
    """Reference coagulation: relabel block ``b`` as ``a`` and fuse neighbours."""
    labels = np.where(p.labels == b, a, p.labels)
    return IntervalPartition.from_starts(p.starts, labels, p.R)


def split_block(p: IntervalPartition, label: int, x: float) -> IntervalPartition:
    """Reference fragmentation: positions of ``label`` at or right of ``x`` form a new block."""
    bp = p.breakpoints
    if x not in bp:
        j = int(np.searchsorted(bp, x))
        bp = np.insert(bp, j, x)
        labels = np.insert(p.labels, j, p.labels[j - 1])
    else:
        labels = p.labels.copy()
    starts = bp[:-1]
    new = labels.max() + 1
    labels = np.where((labels == label) & (starts >= x), new, labels)
    return IntervalPartition.from_starts(starts, labels, p.R)


# ---------------------------------------------------------------------------
# observables


def leftmost_block_length(p: IntervalPartition, log_rescale: bool = False) -> float:
    mass = float(np.sum(p.lengths[p.labels == p.labels[0]]))
    return mass / math.log(p.R) if log_rescale else mass


def measure_theta_R(p: IntervalPartition, windows: Sequence[tuple[float, float]]) -> np.ndarray:
    """Mass IBD to 0 inside [R^a, R^b] for each window, divided by log R."""
    log_r = math.log(p.R)
    mine = p.labels == p.labels[0]
    lo_seg = p.breakpoints[:-1][mine]
    hi_seg = p.breakpoints[1:][mine]
    out = np.empty(len(windows))
    for w, (a, b) in enumerate(windows):
        if not 0.0 <= a <= b <= 1.0:
            raise ValueError(f"window ({a}, {b}) must satisfy 0 <= a <= b <= 1")
        if a == b:
            out[w] = 0.0
            continue
        lo, hi = p.R**a, p.R**b
        out[w] = np.sum(np.clip(np.minimum(hi_seg, hi) - np.maximum(lo_seg, lo), 0.0, None)) / log_r
    return out


def parse_windows(text: str) -> list[tuple[float, float]]:
    """Parse ``"a:b,c:d"`` into window exponent pairs."""
    out = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            a, b = (float(v) for v in tok.split(":"))
        except ValueError:
            raise ValueError(f"bad window {tok!r}: expected a:b") from None
        if not 0.0 <= a <= b <= 1.0:
            raise ValueError(f"window {tok!r} must satisfy 0 <= a <= b <= 1")
        out.append((a, b))
    return out


@dataclass
class EnsembleResult:
    cfg: SimConfig
    windows: list[tuple[float, float]]
    leftmost_raw: np.ndarray
    theta: np.ndarray              # replicates x windows
    segments_total: np.ndarray
    segments_halves: np.ndarray    # replicates x 2: segments in [0, R/2) and [R/2, R)
    n_events: np.ndarray
    max_drift: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def replicates(self) -> int:
        return int(self.leftmost_raw.size)

    @property
    def leftmost_rescaled(self) -> np.ndarray:
        return self.leftmost_raw / math.log(self.cfg.R)


def _replicate(args):
    cfg, i, windows = args
    start = IntervalPartition.single_block(cfg.R)
    run = run_interval(start, cfg.rho, cfg.t_burn, derive_seed(cfg.seed, i))
    p = run.partition
    half = cfg.R / 2
    return (
        i,
        leftmost_block_length(p),
        measure_theta_R(p, windows),
        p.num_segments,
        (p.count_segments(0.0, half), p.count_segments(half, cfg.R)),
        run.n_events,
        run.max_drift,
    )


def equilibrium_ensemble(cfg: SimConfig, replicates: int,
                         windows: Sequence[tuple[float, float]] = ((0.0, 1.0),),
                         threads: int = 1) -> EnsembleResult:
    """Independent replicates started from the single block and observed at ``t_burn``."""
    if replicates < 1:
        raise ValueError("need at least one replicate")
    windows = [tuple(map(float, w)) for w in windows]
    jobs = [(cfg, i, windows) for i in range(replicates)]
    if threads > 1:
        ctx = multiprocessing.get_context("fork")
        with ctx.Pool(threads) as pool:
            rows = pool.map(_replicate, jobs, chunksize=max(1, replicates // (8 * threads)))
    else:
        rows = [_replicate(job) for job in jobs]
    rows.sort(key=lambda r: r[0])
    return EnsembleResult(
        cfg=cfg,
        windows=windows,
        leftmost_raw=np.array([r[1] for r in rows]),
        theta=np.array([r[2] for r in rows]).reshape(replicates, len(windows)),
        segments_total=np.array([r[3] for r in rows]),
        segments_halves=np.array([r[4] for r in rows]),
        n_events=np.array([r[5] for r in rows]),
        max_drift=max(r[6] for r in rows),
    )


def leftmost_mean(R: float, rho: float) -> float:
    """Exact equilibrium E[leftmost raw length] = integral of 1 / (1 + rho x) over [0, R)."""
    return math.log1p(rho * R) / rho


def _three_locus_ibd(x: np.ndarray, y: float) -> np.ndarray:
    """Stationary P(0, x, y in one block) at unit rho, vectorised over x < y.

    States: 012, 01|2, 02|1, 0|12, 0|1|2. Gaps a = x, b = y - x.
    """
    a = x
    b = y - x
    m = x.size
    q = np.zeros((m, 5, 5))
    q[:, 0, 3] = a
    q[:, 0, 1] = b
    q[:, 1:4, 0] = 1.0
    q[:, 1, 4] = a
    q[:, 2, 4] = y
    q[:, 3, 4] = b
    q[:, 4, 1:4] = 1.0
    diag = np.arange(5)
    q[:, diag, diag] = -q.sum(axis=2)
    lhs = np.transpose(q, (0, 2, 1)).copy()
    lhs[:, -1, :] = 1.0
    rhs = np.zeros((m, 5, 1))
    rhs[:, -1, 0] = 1.0
    return np.linalg.solve(lhs, rhs)[:, 0, 0]


def _log_nodes(length: float, nodes: int) -> tuple[np.ndarray, np.ndarray]:
    # Gauss-Legendre in u = log(1 + x) on [0, length]
    g, w = np.polynomial.legendre.leggauss(nodes)
    top = math.log1p(length)
    u = (g + 1) / 2 * top
    return np.expm1(u), w * top / 2 * np.exp(u)


def leftmost_second_moment(R: float, rho: float, nodes: int = 150) -> float:
    """Exact equilibrium E[leftmost raw length^2] on [0, R).

    Equals the double integral of P(0 ~ x ~ y) over [0, R)^2, with the
    three-locus probability from the stationary ARG. By scaling, the value at
    rate rho is rho^-2 times the value at unit rate on [0, rho R).
    """
    span = rho * R
    ys, wy = _log_nodes(span, nodes)
    total = 0.0
    for y, w in zip(ys, wy):
        # split the inner integral so both the x ~ 0 and the x ~ y ends are resolved
        xs, wx = _log_nodes(y / 2, nodes)
        inner = np.sum(wx * _three_locus_ibd(xs, y)) + np.sum(wx * _three_locus_ibd(y - xs, y))
        total += w * inner
    return 2.0 * total / rho**2


def leftmost_mean_bias(R: float, rho: float, t: float) -> float:
    """Exact excess of E[leftmost raw length] at time ``t`` over equilibrium.

    From the single-block start, P_t(0 ~ x) - P_eq(0 ~ x) is the two-locus
    transient rho x / (1 + rho x) * exp(-(1 + rho x) t); integrate over [0, R).
    """
    from scipy.integrate import quad

    f = lambda x: rho * x / (1 + rho * x) * math.exp(-(1 + rho * x) * t)
    # beyond 60 / (rho t) the integrand is below e^-60 of its scale; quad would miss the peak otherwise
    hi = R if t <= 0 else min(R, 60.0 / (rho * t))
    pts = [p for p in (1.0 / rho, 5.0 / rho, 20.0 / rho) if p < hi]
    return quad(f, 0.0, hi, limit=500, points=pts or None)[0]
