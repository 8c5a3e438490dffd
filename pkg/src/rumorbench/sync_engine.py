"""Round-based rumor spreading, fully random or quasirandom, with optional loss.

Round semantics: the senders of round t are exactly the nodes informed at the
start of round t; each sends one transmission; nodes informed during the round
first send in round t+1.  A fully random sender picks a uniform neighbor anew
each round.  A quasirandom sender follows its cyclic contact list from a
uniformly random start offset drawn when it becomes informed, and advances the
list whether or not a transmission is delivered (losses go unnoticed).

Each transmission is delivered independently with the configured success
probability.  All sender updates within a round are computed from the round's
start snapshot and vectorized; randomness is consumed in a fixed order
(addressee choices for all senders in ascending node id, then delivery coins,
then start offsets of the newly informed), so a run is a pure function of
(graph, schedule, config, start, seed).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import Graph
from .rng import RandomSource
from .schedules import ListPolicy, Schedule

__all__ = [
    "ProtocolConfig",
    "SyncState",
    "RunTrace",
    "RoundCapExceeded",
    "sync_round",
    "run_sync",
]

DEFAULT_ROUND_CAP_BASE = 10_000


class RoundCapExceeded(RuntimeError):
    """The run did not finish within the round cap."""


@dataclass(frozen=True)
class ProtocolConfig:
    """Protocol kind plus the per-transmission delivery probability.

    ``success_prob`` is the chance a transmission reaches its addressee;
    1.0 means lossless.
    """

    kind: str  # "random" | "quasi"
    lists: ListPolicy | None = None
    success_prob: float = 1.0

    def __post_init__(self):
        if self.kind not in ("random", "quasi"):
            raise ValueError(f"protocol kind must be 'random' or 'quasi', got {self.kind!r}")
        if not 0.0 < self.success_prob <= 1.0:
            raise ValueError(f"success probability must be in (0, 1], got {self.success_prob}")
        if self.kind == "quasi" and self.lists is None:
            object.__setattr__(self, "lists", ListPolicy.canonic())

    @property
    def is_quasi(self) -> bool:
        return self.kind == "quasi"


@dataclass
class SyncState:
    """Mutable per-run state; owned by a single run."""

    informed: np.ndarray        # bool[n]
    informed_round: np.ndarray  # int32[n], -1 while uninformed
    pos: np.ndarray | None      # int32[n], next list index (quasi only)
    round: int
    informed_count: int


@dataclass
class RunTrace:
    """Record of one dissemination.

    ``informed_counts[t]`` is the cumulative informed count after round t
    (index 0 is the initial state, value 1).  ``broadcast_time`` is None when
    the run was intentionally truncated before everyone was informed.
    """

    broadcast_time: int | None
    informed_counts: np.ndarray
    informed_rounds: np.ndarray
    snapshot: np.ndarray | None = None


def _init_state(g: Graph, cfg: ProtocolConfig, start: int, rng: RandomSource) -> SyncState:
    if not 0 <= start < g.n:
        raise ValueError(f"start node {start} out of range for n={g.n}")
    informed = np.zeros(g.n, dtype=bool)
    informed[start] = True
    informed_round = np.full(g.n, -1, dtype=np.int32)
    informed_round[start] = 0
    pos = None
    if cfg.is_quasi:
        pos = np.zeros(g.n, dtype=np.int32)
        deg = int(g.adj_ptr[start + 1] - g.adj_ptr[start])
        if deg > 0:
            pos[start] = rng.gen.integers(0, deg)
    return SyncState(informed=informed, informed_round=informed_round, pos=pos,
                     round=0, informed_count=1)


def sync_round(
    g: Graph,
    sched: Schedule | None,
    cfg: ProtocolConfig,
    st: SyncState,
    rng: RandomSource,
) -> SyncState:
    """Advance one round in place; returns the state for convenience."""
    gen = rng.gen
    senders = np.flatnonzero(st.informed)
    degrees = (g.adj_ptr[senders + 1] - g.adj_ptr[senders]).astype(np.int64)
    if cfg.is_quasi:
        offs = st.pos[senders].astype(np.int64)
        targets = sched.flat[sched.ptr[senders] + offs]
        nxt = st.pos[senders] + 1
        nxt[nxt == degrees] = 0
        st.pos[senders] = nxt
    else:
        offs = gen.integers(0, degrees)
        targets = g.adj_flat[g.adj_ptr[senders] + offs]
    if cfg.success_prob < 1.0:
        targets = targets[gen.random(targets.shape[0]) < cfg.success_prob]
    fresh = np.unique(targets[~st.informed[targets]])
    st.round += 1
    if fresh.size:
        st.informed[fresh] = True
        st.informed_round[fresh] = st.round
        st.informed_count += fresh.size
        if cfg.is_quasi:
            fresh_deg = (g.adj_ptr[fresh + 1] - g.adj_ptr[fresh]).astype(np.int64)
            st.pos[fresh] = gen.integers(0, fresh_deg)
    return st


def run_sync(
    g: Graph,
    sched: Schedule | None,
    cfg: ProtocolConfig,
    start: int,
    rng: RandomSource,
    *,
    round_cap: int | None = None,
    snapshot_at: int | None = None,
    stop_after: int | None = None,
    validate: bool = False,
) -> RunTrace:
    """Run rounds until every node is informed (or ``stop_after`` rounds).

    ``round_cap`` guards against misconfiguration; exceeding it raises
    RoundCapExceeded.  ``snapshot_at`` records the informed set right after
    that round.  ``stop_after`` intentionally truncates the run (used by the
    spread-geometry experiments); a truncated trace has broadcast_time None.
    """
    if cfg.is_quasi and sched is None:
        raise ValueError("quasirandom runs need a schedule")
    if round_cap is None:
        round_cap = int(DEFAULT_ROUND_CAP_BASE / cfg.success_prob)
    st = _init_state(g, cfg, start, rng)
    counts = [1]
    snapshot = None
    if snapshot_at == 0:
        snapshot = np.flatnonzero(st.informed).copy()
    while st.informed_count < g.n:
        if stop_after is not None and st.round >= stop_after:
            break
        if st.round >= round_cap:
            raise RoundCapExceeded(
                f"not finished after {st.round} rounds (cap {round_cap})"
            )
        prev = st.informed_count
        sync_round(g, sched, cfg, st, rng)
        if st.informed_count > 2 * prev:
            raise AssertionError("informed set more than doubled in one round")
        counts.append(st.informed_count)
        if snapshot_at is not None and st.round == snapshot_at:
            snapshot = np.flatnonzero(st.informed).copy()
    trace = RunTrace(
        broadcast_time=st.round if st.informed_count == g.n else None,
        informed_counts=np.array(counts, dtype=np.int64),
        informed_rounds=st.informed_round,
        snapshot=snapshot,
    )
    if validate:
        _validate_trace(g, cfg, trace)
    return trace


def _validate_trace(g: Graph, cfg: ProtocolConfig, trace: RunTrace) -> None:
    """Costly invariants, enabled for test runs.

    Lossless quasirandom guarantee: a node informed in round t has contacted
    every neighbor by round t + deg, so each neighbor's informed round is at
    most t + deg.
    """
    counts = trace.informed_counts
    if np.any(np.diff(counts) < 0):
        raise AssertionError("informed counts decreased")
    if trace.broadcast_time is not None and g.n > 1:
        if trace.broadcast_time < int(np.ceil(np.log2(g.n))):
            raise AssertionError("finished faster than the doubling bound allows")
    if cfg.is_quasi and cfg.success_prob == 1.0 and trace.broadcast_time is not None:
        rounds = trace.informed_rounds.astype(np.int64)
        src = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees)
        bound = rounds[src] + g.degrees.astype(np.int64)[src]
        if np.any(rounds[g.adj_flat.astype(np.int64)] > bound):
            raise AssertionError("a neighbor was informed later than degree rounds away")
