"""Command-line front end.

Subcommands:

* ``simulate``      broadcast-time statistics for one graph/protocol setup
* ``curve``         per-round mean uninformed counts
* ``torus-spread``  spread geometry of a truncated run from the torus center
* ``disc-sweep``    list discrepancy vs. mean broadcast time, with r squared
* ``analytic``      expected low-degree node count of G(n, p)

Output is CSV (default) or JSON, to stdout or ``--out``.  Every output embeds
the full configuration including the master seed, so replaying the echoed
config reproduces the output byte for byte.  CSV carries the config as a
single ``# config: {...}`` comment line before the header; JSON carries it as
a ``config`` object.

Exit codes: 0 success, 2 argument error, 3 graph generation failure.  The
default seed comes from ``--seed``, else the RUMORBENCH_SEED environment
variable, else OS entropy (echoed for replay).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import secrets
import sys

from .graphs import GraphGenerationError, GraphSpec, parse_graph_spec
from .schedules import ListPolicy
from .sync_engine import ProtocolConfig
from . import experiments

__all__ = ["main"]

SCHEMA_VERSION = 1

SIMULATE_COLUMNS = ["model", "graph", "n", "reps", "mean", "std", "min", "max",
                    "p50", "p90", "p99"]
CURVE_COLUMNS = ["model", "round", "mean_uninformed"]
SPREAD_COLUMNS = [
    "model", "reps",
    "informed_mean", "informed_std",
    "radius_in_mean", "radius_in_std",
    "radius_out_mean", "radius_out_std",
    "radius_diff_mean", "radius_diff_std",
    "normalized_diff_mean", "normalized_diff_std",
]
DISC_COLUMNS = ["perm", "disc1", "disc2", "mean_time"]
ANALYTIC_COLUMNS = ["n", "p", "threshold", "expected_count"]


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, ".10g")
    return str(value)


def _render_csv(config: dict, columns: list[str], rows: list[dict],
                summary: dict | None = None) -> str:
    lines = ["# config: " + json.dumps(config, sort_keys=True)]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_fmt(row[c]) for c in columns))
    if summary:
        for key, value in summary.items():
            lines.append(f"# {key}: {_fmt(value)}")
    return "\n".join(lines) + "\n"


def _render_json(command: str, config: dict, columns: list[str], rows: list[dict],
                 summary: dict | None = None) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "columns": columns,
        "rows": [{c: row[c] for c in columns} for row in rows],
    }
    if summary:
        doc["summary"] = summary
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def _emit(args, command: str, config: dict, columns: list[str], rows: list[dict],
          summary: dict | None = None) -> None:
    if args.format == "json":
        text = _render_json(command, config, columns, rows, summary)
    else:
        text = _render_csv(config, columns, rows, summary)
    if args.out and args.out != "-":
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get("RUMORBENCH_SEED")
    if env is not None:
        try:
            value = int(env)
        except ValueError:
            raise ValueError(f"RUMORBENCH_SEED must be an integer, got {env!r}")
        if value < 0:
            raise ValueError(f"RUMORBENCH_SEED must be nonnegative, got {value}")
        return value
    return secrets.randbits(48)


def _nonneg_int(text: str) -> int:
    value = int(text)
    if value < 0:
        raise argparse.ArgumentTypeError(f"must be nonnegative, got {value}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be positive, got {value}")
    return value


def _failure_prob(text: str) -> float:
    value = float(text)
    if not 0.0 <= value < 1.0:
        raise argparse.ArgumentTypeError(f"failure chance must be in [0, 1), got {value}")
    return value


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=_nonneg_int, default=None,
                        help="master seed (default: RUMORBENCH_SEED or OS entropy)")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    parser.add_argument("--out", default="-", help="output path, - for stdout")
    parser.add_argument("--threads", type=_positive_int, default=1,
                        help="worker processes; results do not depend on this")


def _add_simulation_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--graph", required=True,
                        help="e.g. complete:4096, hypercube:12, torus:64, "
                             "gnp:4096:lnn, regular:4096:12")
    parser.add_argument("--model", choices=("random", "quasi"), default="random")
    parser.add_argument("--lists", default="canonic",
                        help="canonic | random | lowdisc | explicit:<perm>")
    parser.add_argument("--failure", type=_failure_prob, default=0.0,
                        help="per-transmission loss chance (1 - success probability)")
    parser.add_argument("--reps", type=_positive_int, default=100_000)
    parser.add_argument("--resample-every", type=_positive_int, default=1000,
                        help="fresh random-graph sample cadence")
    parser.add_argument("--max-attempts", type=_positive_int, default=1000,
                        help="connected-sample attempts before giving up")
    parser.add_argument("--paired", action="store_true",
                        help="run both models on the same samples and starts")
    parser.add_argument("--async", dest="async_mode", action="store_true",
                        help="continuous-time model with Exp(1) send clocks")


def _protocols(args) -> tuple[tuple[str, ProtocolConfig], ...]:
    lists = ListPolicy.parse(args.lists)
    success = 1.0 - args.failure
    quasi = ProtocolConfig(kind="quasi", lists=lists, success_prob=success)
    rand = ProtocolConfig(kind="random", success_prob=success)
    if args.paired:
        return (("random", rand), ("quasi", quasi))
    if args.model == "quasi":
        return (("quasi", quasi),)
    return (("random", rand),)


def _echo_config(args, command: str, seed: int, extra: dict | None = None) -> dict:
    config = {"command": command, "seed": seed, "schema_version": SCHEMA_VERSION}
    skip = {"seed", "func", "out", "format"}
    for key, value in sorted(vars(args).items()):
        if key not in skip:
            config[key] = value
    if extra:
        config.update(extra)
    return config


def _stats_row(label: str, spec: GraphSpec, reps: int, stats) -> dict:
    return {
        "model": label,
        "graph": spec.canonical_text(),
        "n": spec.n,
        "reps": reps,
        "mean": stats.mean,
        "std": stats.std,
        "min": stats.minimum,
        "max": stats.maximum,
        "p50": stats.percentile(0.50),
        "p90": stats.percentile(0.90),
        "p99": stats.percentile(0.99),
    }


def cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    spec = parse_graph_spec(args.graph)
    cfg = experiments.ExperimentConfig(
        spec=spec,
        protocols=_protocols(args),
        reps=args.reps,
        master_seed=seed,
        async_mode=args.async_mode,
        resample_every=args.resample_every,
        max_attempts=args.max_attempts,
        threads=args.threads,
    )
    outcomes = experiments.estimate_broadcast(cfg)
    rows = [_stats_row(o.label, spec, args.reps, o.stats) for o in outcomes]
    _emit(args, "simulate", _echo_config(args, "simulate", seed),
          SIMULATE_COLUMNS, rows)
    return 0


def cmd_curve(args) -> int:
    seed = _resolve_seed(args)
    spec = parse_graph_spec(args.graph)
    cfg = experiments.ExperimentConfig(
        spec=spec,
        protocols=_protocols(args),
        reps=args.reps,
        master_seed=seed,
        resample_every=args.resample_every,
        max_attempts=args.max_attempts,
        threads=args.threads,
    )
    curves = experiments.uninformed_curve(cfg)
    rows = []
    for label, curve in curves.items():
        limit = curve.shape[0]
        if args.max_round is not None:
            limit = min(limit, args.max_round + 1)
        for t in range(limit):
            rows.append({"model": label, "round": t, "mean_uninformed": float(curve[t])})
    _emit(args, "curve", _echo_config(args, "curve", seed), CURVE_COLUMNS, rows)
    return 0


def cmd_torus_spread(args) -> int:
    seed = _resolve_seed(args)
    results = experiments.torus_spread(
        side=args.side,
        protocols=_protocols(args),
        steps=args.steps,
        reps=args.reps,
        master_seed=seed,
        threads=args.threads,
    )
    rows = []
    for res in results:
        row = {"model": res.label, "reps": args.reps}
        for name in ("informed", "radius_in", "radius_out", "radius_diff",
                     "normalized_diff"):
            mean, std = res.mean_std(name)
            row[f"{name}_mean"] = mean
            row[f"{name}_std"] = std
        rows.append(row)
    if args.dump_cells:
        side = args.side
        cells = results[0].cells
        lines = ["x,y"] + [f"{int(c) // side},{int(c) % side}" for c in cells]
        with open(args.dump_cells, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    _emit(args, "torus-spread", _echo_config(args, "torus-spread", seed),
          SPREAD_COLUMNS, rows)
    return 0


def cmd_disc_sweep(args) -> int:
    seed = _resolve_seed(args)
    if args.perms == "all":
        perms: object = "all"
    elif args.perms.startswith("sample:"):
        perms = int(args.perms[len("sample:"):])
    else:
        raise ValueError(f"--perms must be 'all' or 'sample:<k>', got {args.perms!r}")
    result = experiments.discrepancy_sweep(
        side=args.side,
        perms=perms,
        reps_per_perm=args.reps_per_perm,
        master_seed=seed,
        threads=args.threads,
    )
    rows = [
        {
            "perm": "-".join(str(v) for v in row.perm),
            "disc1": row.disc[1.0],
            "disc2": row.disc[2.0],
            "mean_time": row.mean_time,
        }
        for row in result.rows
    ]
    summary = {"r2_L1": result.r_squared[1.0], "r2_L2": result.r_squared[2.0]}
    _emit(args, "disc-sweep", _echo_config(args, "disc-sweep", seed),
          DISC_COLUMNS, rows, summary)
    return 0


def cmd_analytic(args) -> int:
    n = args.n
    if args.p == "lnn":
        p = math.log(n) / n
    elif args.p == "2lnn":
        p = 2.0 * math.log(n) / n
    else:
        p = float(args.p)
    value = experiments.expected_low_degree_count(n, p, args.threshold)
    rows = [{"n": n, "p": p, "threshold": args.threshold, "expected_count": value}]
    config = {"command": "analytic", "schema_version": SCHEMA_VERSION,
              "n": n, "p": args.p, "threshold": args.threshold}
    _emit(args, "analytic", config, ANALYTIC_COLUMNS, rows)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rumorbench",
        description="Push-protocol rumor spreading benchmarks on synthetic networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sim = sub.add_parser("simulate", help="broadcast-time statistics")
    _add_simulation_args(p_sim)
    _add_common(p_sim)
    p_sim.set_defaults(func=cmd_simulate)

    p_curve = sub.add_parser("curve", help="mean uninformed count per round")
    _add_simulation_args(p_curve)
    p_curve.add_argument("--max-round", type=_nonneg_int, default=None)
    _add_common(p_curve)
    p_curve.set_defaults(func=cmd_curve)

    p_spread = sub.add_parser("torus-spread", help="spread geometry after fixed steps")
    p_spread.add_argument("--side", type=_positive_int, required=True)
    p_spread.add_argument("--steps", type=_nonneg_int, required=True)
    p_spread.add_argument("--model", choices=("random", "quasi"), default="random")
    p_spread.add_argument("--lists", default="canonic")
    p_spread.add_argument("--failure", type=_failure_prob, default=0.0)
    p_spread.add_argument("--reps", type=_positive_int, default=100_000)
    p_spread.add_argument("--paired", action="store_true")
    p_spread.add_argument("--dump-cells", default=None,
                          help="write one snapshot's informed cells as x,y rows")
    _add_common(p_spread)
    p_spread.set_defaults(func=cmd_torus_spread, async_mode=False)

    p_disc = sub.add_parser("disc-sweep", help="list discrepancy vs broadcast time")
    p_disc.add_argument("--side", type=_positive_int, required=True)
    p_disc.add_argument("--perms", default="sample:300",
                        help="'all' or 'sample:<k>'")
    p_disc.add_argument("--reps-per-perm", type=_positive_int, default=200)
    _add_common(p_disc)
    p_disc.set_defaults(func=cmd_disc_sweep)

    p_ana = sub.add_parser("analytic", help="expected low-degree count of G(n, p)")
    p_ana.add_argument("--n", type=_positive_int, required=True)
    p_ana.add_argument("--p", required=True, help="probability literal, lnn, or 2lnn")
    p_ana.add_argument("--threshold", type=_nonneg_int, required=True)
    p_ana.add_argument("--format", choices=("csv", "json"), default="csv")
    p_ana.add_argument("--out", default="-")
    p_ana.set_defaults(func=cmd_analytic)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except GraphGenerationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
