"""Repetition harness, statistics, and derived analyses.

Runs many independent simulations and aggregates them: broadcast-time summary
tables, per-round uninformed-count decay curves, torus spread geometry,
discrepancy-vs-time sweeps, and the closed-form low-degree-count estimate for
G(n, p).

Reproducibility contract: run i draws its start vertex from the stream
derived as (master_seed, "start", i) and its protocol randomness from
(master_seed, "slot<j>", i); random-graph sample number s comes from
(master_seed, "graph", s) with a fresh connected sample every
``resample_every`` runs.  Aggregation is keyed by run index, so results are
identical regardless of how runs are chunked or how many worker processes
execute them.  In paired mode all protocol slots share the graph sample and
the start vertex of each run but use independent protocol streams.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .async_engine import run_async
from .graphs import Graph, GraphSpec, sample_connected
from .rng import RandomSource, fold_seed
from .schedules import ListPolicy, Schedule, build_schedule, lp_discrepancy
from .sync_engine import ProtocolConfig, run_sync

__all__ = [
    "ExperimentConfig",
    "SummaryStats",
    "ProtocolOutcome",
    "SpreadResult",
    "UndefinedCorrelationError",
    "summarize",
    "estimate_broadcast",
    "size_sweep",
    "uninformed_curve",
    "tail_report",
    "torus_spread",
    "discrepancy_sweep",
    "pearson",
    "expected_low_degree_count",
]


class UndefinedCorrelationError(ValueError):
    """Pearson correlation is undefined (constant series or too few points)."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One batch of repeated runs.

    ``protocols`` is a tuple of (label, ProtocolConfig) slots; two slots give
    the paired comparison mode.  ``start`` fixes the start vertex; None draws
    it uniformly per run.
    """

    spec: GraphSpec
    protocols: tuple[tuple[str, ProtocolConfig], ...]
    reps: int
    master_seed: int
    async_mode: bool = False
    resample_every: int = 1000
    snapshot_at: int | None = None
    stop_after: int | None = None
    start: int | None = None
    bin_width: float | None = None
    round_cap: int | None = None
    max_attempts: int = 1000
    threads: int = 1

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError(f"need reps >= 1, got {self.reps}")
        if self.resample_every < 1:
            raise ValueError(f"need resample_every >= 1, got {self.resample_every}")
        if self.bin_width is not None and self.bin_width <= 0:
            raise ValueError(f"need bin_width > 0, got {self.bin_width}")
        if not self.protocols:
            raise ValueError("need at least one protocol slot")
        if self.async_mode and (self.stop_after is not None or self.snapshot_at is not None):
            raise ValueError("snapshots and truncation are synchronous-only features")

    @property
    def effective_bin_width(self) -> float:
        if self.bin_width is not None:
            return self.bin_width
        return 0.2 if self.async_mode else 1.0


@dataclass
class SummaryStats:
    """Moments, extremes, percentiles, and a fixed-width histogram."""

    count: int
    mean: float
    std: float
    minimum: float
    maximum: float
    bin_width: float
    histogram: dict[float, int]
    sorted_samples: np.ndarray

    def percentile(self, q: float) -> float:
        """Nearest-rank percentile on the sorted sample, q in [0, 1]."""
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"need q in [0, 1], got {q}")
        if q == 0.0:
            return float(self.sorted_samples[0])
        rank = math.ceil(q * self.count)
        return float(self.sorted_samples[rank - 1])


def summarize(samples, bin_width: float = 1.0) -> SummaryStats:
    """Aggregate raw run values; sample std uses the n-1 denominator."""
    arr = np.asarray(samples, dtype=np.float64)
    if arr.size == 0:
        raise ValueError("cannot summarize an empty sample")
    if bin_width <= 0:
        raise ValueError(f"need bin_width > 0, got {bin_width}")
    sorted_arr = np.sort(arr)
    std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
    bins = np.floor(arr / bin_width).astype(np.int64)
    hist: dict[float, int] = {}
    for b, c in zip(*np.unique(bins, return_counts=True)):
        hist[float(b) * bin_width] = int(c)
    return SummaryStats(
        count=int(arr.size),
        mean=float(arr.mean()),
        std=std,
        minimum=float(sorted_arr[0]),
        maximum=float(sorted_arr[-1]),
        bin_width=bin_width,
        histogram=hist,
        sorted_samples=sorted_arr,
    )


@dataclass
class ProtocolOutcome:
    """Per-protocol result of a broadcast-time experiment."""

    label: str
    config: ProtocolConfig
    times: np.ndarray          # broadcast time per run, indexed by run
    stats: SummaryStats
    uninformed_sums: np.ndarray | None = None  # per-round totals (curve mode)


# ---------------------------------------------------------------------------
# Worker side: graph/schedule caching and block execution
# ---------------------------------------------------------------------------

_CACHE: dict[tuple, tuple[Graph, dict]] = {}
_CACHE_LIMIT = 4
_DIST_CACHE: dict[tuple[int, int], np.ndarray] = {}


def _get_sample(spec: GraphSpec, master_seed: int, sample_idx: int,
                max_attempts: int) -> tuple[Graph, dict]:
    key = (spec.canonical_text(), master_seed, sample_idx if spec.is_random else 0)
    hit = _CACHE.get(key)
    if hit is None:
        rng = RandomSource(master_seed).derive("graph", key[2])
        graph = sample_connected(spec, rng, max_attempts)
        hit = (graph, {})
        if len(_CACHE) >= _CACHE_LIMIT:
            _CACHE.pop(next(iter(_CACHE)))
        _CACHE[key] = hit
    return hit


def _get_schedule(graph: Graph, sched_cache: dict, proto: ProtocolConfig,
                  run_rng: RandomSource) -> Schedule | None:
    if not proto.is_quasi:
        return None
    policy = proto.lists
    if policy.is_random:
        return build_schedule(graph, policy, run_rng)
    key = policy.text()
    sched = sched_cache.get(key)
    if sched is None:
        sched = build_schedule(graph, policy)
        sched_cache[key] = sched
    return sched


@dataclass(frozen=True)
class _BlockTask:
    cfg: ExperimentConfig
    lo: int
    hi: int
    collect: str  # times | curve | spread


def _torus_center_distances(side: int, start: int) -> np.ndarray:
    key = (side, start)
    dist = _DIST_CACHE.get(key)
    if dist is None:
        ids = np.arange(side * side, dtype=np.int64)
        a, b = ids // side, ids % side
        da = np.abs(a - start // side)
        db = np.abs(b - start % side)
        da = np.minimum(da, side - da)
        db = np.minimum(db, side - db)
        dist = np.sqrt((da * da + db * db).astype(np.float64))
        _DIST_CACHE[key] = dist
    return dist


def _spread_geometry(side: int, start: int, snapshot: np.ndarray) -> tuple[int, float, float]:
    """(informed count, inner radius, outer radius) of an informed set.

    Distances are torus-Euclidean: coordinate offsets wrap to the nearest
    representative before the Euclidean norm.
    """
    dist = _torus_center_distances(side, start)
    informed_mask = np.zeros(dist.shape[0], dtype=bool)
    informed_mask[snapshot] = True
    radius_out = float(dist[informed_mask].max())
    if informed_mask.all():
        radius_in = float(dist.max())
    else:
        d_star = dist[~informed_mask].min()
        inner = dist[dist < d_star]
        radius_in = float(inner.max()) if inner.size else 0.0
    return int(snapshot.size), radius_in, radius_out


def _run_block(task: _BlockTask) -> dict:
    cfg = task.cfg
    n_runs = task.hi - task.lo
    master = RandomSource(cfg.master_seed)
    out: dict = {"lo": task.lo, "hi": task.hi, "slots": []}
    times = {j: np.empty(n_runs, dtype=np.float64) for j in range(len(cfg.protocols))}
    curves: dict[int, list] = {j: [] for j in range(len(cfg.protocols))}
    geoms = {
        j: {k: np.empty(n_runs, dtype=np.float64)
            for k in ("informed", "radius_in", "radius_out")}
        for j in range(len(cfg.protocols))
    }
    cells: dict[int, np.ndarray] = {}
    for i in range(task.lo, task.hi):
        sample_idx = i // cfg.resample_every
        graph, sched_cache = _get_sample(cfg.spec, cfg.master_seed, sample_idx,
                                         cfg.max_attempts)
        if cfg.start is not None:
            start = cfg.start
        else:
            start = int(master.derive("start", i).gen.integers(0, graph.n))
        for j, (_, proto) in enumerate(cfg.protocols):
            rs = master.derive(f"slot{j}", i)
            sched = _get_schedule(graph, sched_cache, proto, rs)
            if cfg.async_mode:
                trace = run_async(graph, sched, proto, start, rs)
                times[j][i - task.lo] = trace.broadcast_time
            else:
                trace = run_sync(
                    graph, sched, proto, start, rs,
                    round_cap=cfg.round_cap,
                    snapshot_at=cfg.snapshot_at,
                    stop_after=cfg.stop_after,
                )
                times[j][i - task.lo] = (
                    trace.broadcast_time if trace.broadcast_time is not None else np.nan
                )
                if task.collect == "curve":
                    _accumulate_curve(curves[j], graph.n, trace.informed_counts)
                elif task.collect == "spread":
                    informed, r_in, r_out = _spread_geometry(
                        cfg.spec.side, start, trace.snapshot
                    )
                    geoms[j]["informed"][i - task.lo] = informed
                    geoms[j]["radius_in"][i - task.lo] = r_in
                    geoms[j]["radius_out"][i - task.lo] = r_out
                    if i == 0:
                        cells[j] = trace.snapshot
    for j in range(len(cfg.protocols)):
        slot: dict = {"times": times[j]}
        if task.collect == "curve":
            slot["uninformed"] = np.array(curves[j], dtype=np.int64)
        if task.collect == "spread":
            slot["geometry"] = geoms[j]
            slot["cells"] = cells.get(j)
        out["slots"].append(slot)
    return out


def _accumulate_curve(acc: list, n: int, informed_counts: np.ndarray) -> None:
    # integer sums keep merging exact and order-independent
    uninformed = n - informed_counts
    if len(acc) < uninformed.shape[0]:
        acc.extend([0] * (uninformed.shape[0] - len(acc)))
    for t, v in enumerate(uninformed):
        acc[t] += int(v)


def _block_ranges(cfg: ExperimentConfig) -> list[tuple[int, int]]:
    boundary = cfg.resample_every if cfg.spec.is_random else cfg.reps
    if cfg.threads > 1:
        target = max(1, -(-cfg.reps // (cfg.threads * 4)))
        boundary = max(1, min(boundary, target))
    ranges = []
    lo = 0
    while lo < cfg.reps:
        hi = min(cfg.reps, (lo // boundary + 1) * boundary)
        ranges.append((lo, hi))
        lo = hi
    return ranges


def _execute(cfg: ExperimentConfig, collect: str) -> list[dict]:
    """Run all blocks and stitch per-slot results by run index."""
    tasks = [_BlockTask(cfg=cfg, lo=lo, hi=hi, collect=collect)
             for lo, hi in _block_ranges(cfg)]
    if cfg.threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            results = list(pool.map(_run_block, tasks))
    else:
        results = [_run_block(t) for t in tasks]
    merged = []
    for j in range(len(cfg.protocols)):
        times = np.empty(cfg.reps, dtype=np.float64)
        curve_parts = []
        geometry = None
        cells = None
        for res in results:
            slot = res["slots"][j]
            times[res["lo"]:res["hi"]] = slot["times"]
            if collect == "curve":
                curve_parts.append(slot["uninformed"])
            if collect == "spread":
                if geometry is None:
                    geometry = {k: np.empty(cfg.reps, dtype=np.float64)
                                for k in slot["geometry"]}
                for k, arr in slot["geometry"].items():
                    geometry[k][res["lo"]:res["hi"]] = arr
                if res["lo"] == 0:
                    cells = slot["cells"]
        entry: dict = {"times": times}
        if collect == "curve":
            width = max(p.shape[0] for p in curve_parts)
            total = np.zeros(width, dtype=np.int64)
            for p in curve_parts:
                total[:p.shape[0]] += p
            entry["uninformed_sums"] = total
        if collect == "spread":
            entry["geometry"] = geometry
            entry["cells"] = cells
        merged.append(entry)
    return merged


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------

def estimate_broadcast(cfg: ExperimentConfig) -> list[ProtocolOutcome]:
    """Estimate broadcast-time statistics for every protocol slot."""
    merged = _execute(cfg, "times")
    out = []
    for (label, proto), entry in zip(cfg.protocols, merged):
        stats = summarize(entry["times"], cfg.effective_bin_width)
        out.append(ProtocolOutcome(label=label, config=proto,
                                   times=entry["times"], stats=stats))
    return out


def uninformed_curve(cfg: ExperimentConfig) -> dict[str, np.ndarray]:
    """Mean uninformed count per round, per protocol label.

    Runs that finished early contribute zero uninformed nodes to later
    rounds.  Entry 0 is n - 1 exactly.
    """
    if cfg.async_mode:
        raise ValueError("uninformed curves are a synchronous-mode analysis")
    merged = _execute(cfg, "curve")
    return {
        label: entry["uninformed_sums"].astype(np.float64) / cfg.reps
        for (label, _), entry in zip(cfg.protocols, merged)
    }


def tail_report(stats: SummaryStats, above_offset: float = 13.0,
                within_offset: float = 6.0) -> dict[str, float]:
    """Tail fractions of the run sample around its mean."""
    samples = stats.sorted_samples
    above = float(np.mean(samples > stats.mean + above_offset))
    within = float(np.mean(samples < stats.mean + within_offset))
    return {
        "fraction_above": above,
        "fraction_within": within,
        "max_minus_mean": stats.maximum - stats.mean,
    }


@dataclass
class SpreadResult:
    """Per-run spread geometry of a truncated torus broadcast.

    ``normalized_diff`` is (radius_out - radius_in) / sqrt(informed count),
    computed per run and then averaged.
    """

    label: str
    informed: np.ndarray
    radius_in: np.ndarray
    radius_out: np.ndarray
    radius_diff: np.ndarray
    normalized_diff: np.ndarray
    cells: np.ndarray | None = None

    def mean_std(self, name: str) -> tuple[float, float]:
        arr = getattr(self, name)
        std = float(arr.std(ddof=1)) if arr.size > 1 else 0.0
        return float(arr.mean()), std


def torus_spread(
    side: int,
    protocols: tuple[tuple[str, ProtocolConfig], ...],
    steps: int,
    reps: int,
    master_seed: int,
    threads: int = 1,
) -> list[SpreadResult]:
    """Run ``steps`` lossless rounds from the torus center and measure the blob.

    Reports, per protocol: informed count, the largest all-informed radius,
    the smallest all-containing radius, their difference, and the difference
    normalized by sqrt(informed count).
    """
    if steps < 0:
        raise ValueError(f"need steps >= 0, got {steps}")
    spec = GraphSpec.torus(side)
    center = (side // 2) * side + (side // 2)
    cfg = ExperimentConfig(
        spec=spec, protocols=protocols, reps=reps, master_seed=master_seed,
        stop_after=steps, snapshot_at=steps, start=center, threads=threads,
    )
    merged = _execute(cfg, "spread")
    out = []
    for (label, _), entry in zip(cfg.protocols, merged):
        geo = entry["geometry"]
        diff = geo["radius_out"] - geo["radius_in"]
        out.append(SpreadResult(
            label=label,
            informed=geo["informed"].astype(np.int64),
            radius_in=geo["radius_in"],
            radius_out=geo["radius_out"],
            radius_diff=diff,
            normalized_diff=diff / np.sqrt(geo["informed"]),
            cells=entry["cells"],
        ))
    return out


def pearson(xs, ys) -> tuple[float, float]:
    """Product-moment correlation (r, r squared)."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("need two equal-length 1-d series")
    if x.size < 2:
        raise UndefinedCorrelationError("need at least two points")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = float(np.sqrt(np.sum(dx * dx)))
    sy = float(np.sqrt(np.sum(dy * dy)))
    if sx == 0.0 or sy == 0.0:
        raise UndefinedCorrelationError("correlation undefined for a constant series")
    r = float(np.sum(dx * dy)) / (sx * sy)
    return r, r * r


@dataclass
class DiscSweepRow:
    perm: tuple[int, ...]
    disc: dict[float, float]
    mean_time: float


@dataclass
class DiscSweepResult:
    rows: list[DiscSweepRow]
    r_squared: dict[float, float]


def _sample_permutations(m: int, count: int, rng: RandomSource) -> list[tuple[int, ...]]:
    seen: set[tuple[int, ...]] = set()
    out: list[tuple[int, ...]] = []
    gen = rng.gen
    while len(out) < count:
        perm = tuple(int(v) for v in gen.permutation(np.arange(1, m + 1)))
        if perm not in seen:
            seen.add(perm)
            out.append(perm)
    return out


def discrepancy_sweep(
    side: int,
    perms,
    reps_per_perm: int,
    master_seed: int,
    p_values: tuple[float, ...] = (1.0, 2.0),
    threads: int = 1,
) -> DiscSweepResult:
    """Correlate direction-list discrepancy with mean quasirandom broadcast time.

    ``perms`` is "all" (every bijection on 1..8), an integer (that many
    distinct uniformly sampled permutations), or an explicit iterable of
    permutations.  Runs start at the torus center.
    """
    m = 8
    if perms == "all":
        perm_list = [tuple(p) for p in itertools.permutations(range(1, m + 1))]
    elif isinstance(perms, int):
        if perms < 1:
            raise ValueError(f"need a positive sample size, got {perms}")
        perm_list = _sample_permutations(m, perms, RandomSource(master_seed).derive("perm-sample"))
    else:
        perm_list = [tuple(int(v) for v in p) for p in perms]
    spec = GraphSpec.torus(side)
    center = (side // 2) * side + (side // 2)
    rows = []
    for idx, perm in enumerate(perm_list):
        proto = ProtocolConfig(kind="quasi", lists=ListPolicy.explicit(perm))
        cfg = ExperimentConfig(
            spec=spec, protocols=(("quasi", proto),), reps=reps_per_perm,
            master_seed=fold_seed(master_seed, "perm", idx), start=center,
            threads=threads,
        )
        outcome = estimate_broadcast(cfg)[0]
        rows.append(DiscSweepRow(
            perm=perm,
            disc={p: lp_discrepancy(perm, p) for p in p_values},
            mean_time=outcome.stats.mean,
        ))
    r2 = {}
    for p in p_values:
        _, r2[p] = pearson([row.disc[p] for row in rows],
                           [row.mean_time for row in rows])
    return DiscSweepResult(rows=rows, r_squared=r2)


def size_sweep(
    specs,
    protocols: tuple[tuple[str, ProtocolConfig], ...],
    reps: int,
    master_seed: int,
    **kwargs,
) -> list[dict]:
    """Mean broadcast time per (graph size, protocol), for scaling plots."""
    rows = []
    for idx, spec in enumerate(specs):
        cfg = ExperimentConfig(
            spec=spec, protocols=protocols, reps=reps,
            master_seed=fold_seed(master_seed, "size", idx), **kwargs,
        )
        for outcome in estimate_broadcast(cfg):
            rows.append({"n": spec.n, "label": outcome.label,
                         "mean": outcome.stats.mean})
    return rows


def expected_low_degree_count(n: int, p: float, threshold: int) -> float:
    """Expected number of G(n, p) nodes with degree below ``threshold``.

    n * sum_{k < threshold} C(n-1, k) p^k (1-p)^(n-1-k), with the binomial
    terms evaluated in the log domain for numerical stability.
    """
    if n < 2:
        raise ValueError(f"need n >= 2, got {n}")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"need p in [0, 1], got {p}")
    if threshold < 0:
        raise ValueError(f"need threshold >= 0, got {threshold}")
    upper = min(threshold, n)  # degrees range over 0..n-1
    if upper == 0:
        return 0.0
    if p == 0.0:
        return float(n)  # every degree is 0 < threshold
    if p == 1.0:
        return float(n) if threshold > n - 1 else 0.0
    log_p = math.log(p)
    log_q = math.log1p(-p)
    m = n - 1
    total = 0.0
    for k in range(upper):
        log_term = (
            math.lgamma(m + 1) - math.lgamma(k + 1) - math.lgamma(m - k + 1)
            + k * log_p + (m - k) * log_q
        )
        total += math.exp(log_term)
    return total * n
