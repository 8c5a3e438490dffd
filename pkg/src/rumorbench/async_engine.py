"""Continuous-time rumor spreading with unit-mean exponential send clocks.

Every informed node transmits at the arrival times of its own rate-1 Poisson
clock (first transmission one Exp(1) after getting informed, then Exp(1)
between consecutive transmissions); the addressee order per protocol is the
same as in the round-based model.

Rather than replaying every transmission through an event queue, runs are
computed by an exact first-passage reduction.  The informing time of v
satisfies T_v = min over neighbors u of (T_u + W_uv), where W_uv is the wait
from u's informing until its first delivered transmission to v:

* fully random: u's contacts to a fixed neighbor are a thinned Poisson
  process of rate f/deg(u), so W_uv ~ Exp(mean deg(u)/f), independent across
  directed edges.
* quasirandom: u's k-th transmission happens at the k-th partial sum of its
  exponential stream and targets list position (s_u + k - 1) mod deg(u), so
  W_uv is the partial sum at v's first (delivered) attempt; partial sums are
  shared across a node's outgoing edges exactly as in the real process.

Solving T = min-plus closure from the start node is single-source shortest
paths, done in C via scipy.  For very high degree nodes (complete graphs) the
quasirandom weights are truncated to each node's earliest contacts with an
explicit a-posteriori soundness check that falls back to a larger horizon on
the (astronomically rare) failure, keeping the output distribution exact.
The fully random model on complete graphs uses the exchangeable jump chain:
with k of n nodes informed, the next delivered useful contact arrives at rate
k * (n - k) * f / (n - 1) and informs a uniformly chosen uninformed node.

A run consumes its stream in one fixed order per code path, so traces are
deterministic under (graph, schedule, config, start, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from .graphs import Graph
from .rng import RandomSource
from .schedules import Schedule
from .sync_engine import ProtocolConfig

__all__ = ["AsyncTrace", "run_async"]

# Quasirandom horizon: nodes with larger degree only materialize their first
# _TRUNCATION_CAP contacts (plus one for the soundness bound).
_TRUNCATION_THRESHOLD = 96
_TRUNCATION_CAP = 64


@dataclass
class AsyncTrace:
    """Informing time of every node; start node at time 0."""

    broadcast_time: float
    informing_times: np.ndarray

    def __post_init__(self):
        if not np.all(np.isfinite(self.informing_times)):
            raise ValueError("infinite informing time: graph not connected?")


def run_async(
    g: Graph,
    sched: Schedule | None,
    cfg: ProtocolConfig,
    start: int,
    rng: RandomSource,
) -> AsyncTrace:
    """Simulate one continuous-time dissemination from ``start``."""
    if not 0 <= start < g.n:
        raise ValueError(f"start node {start} out of range for n={g.n}")
    if g.n == 1:
        return AsyncTrace(broadcast_time=0.0, informing_times=np.zeros(1))
    if cfg.is_quasi:
        if sched is None:
            raise ValueError("quasirandom runs need a schedule")
        times = _quasi_first_passage(g, sched, cfg.success_prob, start, rng)
    elif g.kind == "complete":
        times = _complete_jump_chain(g.n, cfg.success_prob, start, rng)
    else:
        times = _random_first_passage(g, cfg.success_prob, start, rng)
    return AsyncTrace(broadcast_time=float(times.max()), informing_times=times)


def _complete_jump_chain(n: int, f: float, start: int, rng: RandomSource) -> np.ndarray:
    """Exchangeable reduction for fully random spreading on the complete graph.

    All uninformed nodes are interchangeable, so only the informed count k
    matters: useful contacts arrive at rate k*(n-k)*f/(n-1) and hit a uniform
    uninformed node.
    """
    gen = rng.gen
    k = np.arange(1, n, dtype=np.float64)
    rates = k * (n - k) * f / (n - 1)
    jump_times = np.cumsum(gen.standard_exponential(n - 1) / rates)
    others = np.delete(np.arange(n, dtype=np.int64), start)
    order = gen.permutation(others)
    times = np.zeros(n, dtype=np.float64)
    times[order] = jump_times
    return times


def _shortest_times(
    n: int, weights: np.ndarray, indices: np.ndarray, indptr: np.ndarray, start: int
) -> np.ndarray:
    graph = csr_matrix((weights, indices, indptr), shape=(n, n))
    return dijkstra(graph, directed=True, indices=start)


def _random_first_passage(g: Graph, f: float, start: int, rng: RandomSource) -> np.ndarray:
    degs = g.degrees.astype(np.float64)
    src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees)
    weights = rng.gen.standard_exponential(g.adj_flat.shape[0]) * (degs[src] / f)
    return _shortest_times(g.n, weights, g.adj_flat, g.adj_ptr, start)


def _segment_partial_sums(exps: np.ndarray, indptr: np.ndarray) -> np.ndarray:
    """Per-segment running sums: out[i] = sum of exps in i's segment up to i."""
    cs = np.cumsum(exps)
    starts_idx = np.repeat(np.arange(indptr.shape[0] - 1), np.diff(indptr))
    seg_start = indptr[starts_idx]
    seg_base = np.where(seg_start > 0, cs[np.maximum(seg_start - 1, 0)], 0.0)
    return cs - seg_base


def _quasi_first_passage(
    g: Graph, sched: Schedule, f: float, start: int, rng: RandomSource
) -> np.ndarray:
    gen = rng.gen
    n = g.n
    degs = g.degrees.astype(np.int64)
    s = gen.integers(0, degs)  # start offsets, one per node
    max_deg = int(degs.max())
    if f >= 1.0 and max_deg > _TRUNCATION_THRESHOLD:
        return _quasi_truncated(g, sched, s, start, gen)
    if f >= 1.0:
        extra_cycles = None
    else:
        # failures before the first delivered attempt at each target
        extra_cycles = (gen.geometric(f, size=g.adj_flat.shape[0]) - 1).astype(np.int64)
    return _quasi_full(g, sched, s, extra_cycles, start, gen)


def _quasi_arc_positions(degs: np.ndarray, caps: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Arc source ids, per-arc attempt rank (1-based), and arc indptr."""
    indptr = np.zeros(degs.shape[0] + 1, dtype=np.int64)
    np.cumsum(caps, out=indptr[1:])
    src = np.repeat(np.arange(degs.shape[0], dtype=np.int64), caps)
    rank = np.arange(indptr[-1], dtype=np.int64) - indptr[src] + 1
    return src, rank, indptr


def _quasi_full(
    g: Graph,
    sched: Schedule,
    s: np.ndarray,
    extra_cycles: np.ndarray | None,
    start: int,
    gen: np.random.Generator,
) -> np.ndarray:
    """Exact weights with one arc per (node, neighbor); no truncation."""
    n = g.n
    degs = g.degrees.astype(np.int64)
    src, rank, indptr = _quasi_arc_positions(degs, degs)
    pos = (s[src] + rank - 1) % degs[src]
    targets = sched.flat[sched.ptr[src] + pos].astype(np.int32)
    if extra_cycles is None:
        exps = gen.standard_exponential(int(indptr[-1]))
        weights = _segment_partial_sums(exps, indptr)
    else:
        # attempt index of the first delivered transmission to each target
        attempt = rank + degs[src] * extra_cycles
        lengths = np.zeros(n, dtype=np.int64)
        np.maximum.at(lengths, src, attempt)
        eptr = np.zeros(n + 1, dtype=np.int64)
        np.cumsum(lengths, out=eptr[1:])
        exps = gen.standard_exponential(int(eptr[-1]))
        cs = np.concatenate([[0.0], np.cumsum(exps)])
        weights = cs[eptr[src] + attempt] - cs[eptr[src]]
    times = _shortest_times(n, weights, targets, indptr, start)
    return times


def _quasi_truncated(
    g: Graph,
    sched: Schedule,
    s: np.ndarray,
    start: int,
    gen: np.random.Generator,
) -> np.ndarray:
    """Lazy horizon: only each node's first min(deg, cap) contacts are built.

    The cap-limited shortest-path solution equals the full one whenever every
    node is informed before any node's first excluded contact could happen
    (bounded by the partial sum one past the cap).  When that check fails the
    horizon is widened by EXTENDING each node's exponential stream, never
    redrawing it: the run stays a deterministic function of one underlying
    process, so truncation cannot bias the output distribution.
    """
    n = g.n
    degs = g.degrees.astype(np.int64)
    max_deg = int(degs.max())
    cap = min(_TRUNCATION_CAP, max_deg)
    cols = min(cap + 1, max_deg)
    exps = gen.standard_exponential((n, cols))
    while True:
        caps = np.minimum(degs, cap)
        sums = np.cumsum(exps, axis=1)
        src, rank, indptr = _quasi_arc_positions(degs, caps)
        pos = (s[src] + rank - 1) % degs[src]
        targets = sched.flat[sched.ptr[src] + pos].astype(np.int32)
        weights = sums[src, rank - 1]
        times = _shortest_times(n, weights, targets, indptr, start)
        truncated = caps < degs
        if not np.any(truncated):
            return times
        bound = (times[truncated] + sums[truncated, cap]).min()
        if times.max() < bound:
            return times
        cap = min(2 * cap, max_deg)
        need = min(cap + 1, max_deg)
        if need > cols:
            extra = gen.standard_exponential((n, need - cols))
            exps = np.concatenate([exps, extra], axis=1)
            cols = need
