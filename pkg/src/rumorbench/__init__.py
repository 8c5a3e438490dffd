"""rumorbench: push-protocol rumor spreading benchmarks on synthetic networks."""

from .async_engine import AsyncTrace, run_async
from .experiments import (
    DiscSweepResult,
    ExperimentConfig,
    ProtocolOutcome,
    SpreadResult,
    SummaryStats,
    UndefinedCorrelationError,
    discrepancy_sweep,
    estimate_broadcast,
    expected_low_degree_count,
    pearson,
    size_sweep,
    summarize,
    tail_report,
    torus_spread,
    uninformed_curve,
)
from .graphs import (
    Graph,
    GraphGenerationError,
    GraphSpec,
    gen_complete,
    gen_gnp,
    gen_hypercube,
    gen_random_regular,
    gen_torus,
    is_connected,
    parse_graph_spec,
    sample_connected,
)
from .rng import RandomSource, fold_seed
from .schedules import (
    ListPolicy,
    Schedule,
    build_schedule,
    canonic_schedule,
    interval_discrepancy,
    lp_discrepancy,
    permuted_direction_schedule,
    random_schedule,
    van_der_corput_direction_sequence,
)
from .sync_engine import (
    ProtocolConfig,
    RoundCapExceeded,
    RunTrace,
    SyncState,
    run_sync,
    sync_round,
)

__version__ = "0.1.0"
