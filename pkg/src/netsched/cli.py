"""Command-line entry points: gen-instance, simulate, dp-solve, campaign,
aggregate."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .dp import FeasibilityLimits, build_truncated, relative_value_iteration
from .experiments import (
    ExperimentCampaign,
    aggregate,
    policy_column,
    run_campaign,
)
from .heuristics import make_policy
from .instgen import generate, instance_from_json, instance_to_json
from .sim import simulate_discrete, simulate_dvo


def _load_instance(path: str):
    return instance_from_json(Path(path).read_text())


def _cmd_gen_instance(args) -> int:
    instance = generate(args.layout, args.seed)
    text = instance_to_json(instance)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def _cmd_simulate(args) -> int:
    instance = _load_instance(args.instance)
    net = instance.network
    if args.policy == "dvo":
        report = simulate_dvo(net, args.seed, float(args.warmup), float(args.horizon))
    else:
        policy = make_policy(args.policy, net)
        report = simulate_discrete(net, policy, args.seed, int(args.warmup), int(args.horizon))
    print(report.to_json())
    if args.csv:
        import csv

        path = Path(args.csv)
        exists = path.exists()
        with open(path, "a", newline="") as handle:
            writer = csv.writer(handle)
            if not exists:
                writer.writerow(["instance", "policy", "seed", "warmup", "horizon",
                                 "average_cost", "ci_half_width"])
            writer.writerow([args.instance, report.policy, args.seed, report.warmup,
                             report.horizon, report.average_cost, report.ci_half_width])
    return 0


def _cmd_dp_solve(args) -> int:
    instance = _load_instance(args.instance)
    mdp = build_truncated(instance.network, args.m)
    result = relative_value_iteration(mdp, tolerance=args.tol, max_iters=args.max_iters)
    print(json.dumps({
        "g_star": result.g_star,
        "iterations": result.iterations,
        "span": result.span_at_exit,
        "converged": result.converged,
        "tolerance": result.tolerance,
        "m": args.m,
    }, indent=2, sort_keys=True))
    return 0 if result.converged else 1


def _cmd_campaign(args) -> int:
    limits = FeasibilityLimits(
        state_limit=args.state_limit,
        time_limit=args.time_limit,
        tolerance=args.dp_tol,
    )
    campaign = ExperimentCampaign(
        layout=args.layout.replace("-", "_"),
        instance_count=args.count,
        policies=tuple(args.policies.split(",")),
        base_seed=args.seed,
        warmup=args.warmup,
        horizon=args.horizon,
        dvo_warmup=float(args.warmup),
        dvo_horizon=float(args.horizon),
        with_dp=args.with_dp,
        dp_limits=limits,
    )
    rows = run_campaign(campaign, out_csv=args.out, workers=args.workers)
    print(f"wrote {len(rows)} instance rows to {args.out}")
    return 0


def _cmd_aggregate(args) -> int:
    policies = args.policies.split(",") if args.policies else None
    table = aggregate(
        args.results,
        kind=args.kind,
        baseline=args.baseline,
        policies=policies,
        bucket_by=args.bucket_by,
    )
    if args.json:
        print(json.dumps([dataclasses.asdict(row) for row in table], indent=2))
        return 0
    for row in table:
        pct = " ".join(f"p{p}={row.percentiles[p]:.2f}" for p in sorted(row.percentiles))
        print(f"{row.label:32s} {row.bucket:18s} n={row.count:<5d} "
              f"mean={row.mean:7.2f} +-{row.half_width:.2f}  {pct}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="netsched",
        description="Stochastic dynamic job scheduling workbench",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-instance", help="generate a random problem instance")
    gen.add_argument("--layout", choices=["two-cluster", "lattice"], required=True)
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--out", type=str, default=None)
    gen.set_defaults(func=_cmd_gen_instance)

    simu = sub.add_parser("simulate", help="simulate one policy on one instance")
    simu.add_argument("--instance", required=True)
    simu.add_argument("--policy", required=True,
                      help="dvo | stay | polling | slq | kstop:K | kfroml:K:L:method")
    simu.add_argument("--seed", type=int, default=0)
    simu.add_argument("--warmup", type=float, default=10_000)
    simu.add_argument("--horizon", type=float, default=1_000_000)
    simu.add_argument("--csv", type=str, default=None, help="append a results row here")
    simu.set_defaults(func=_cmd_simulate)

    dps = sub.add_parser("dp-solve", help="relative value iteration on a truncated MDP")
    dps.add_argument("--instance", required=True)
    dps.add_argument("--m", type=int, required=True, help="max jobs per demand point")
    dps.add_argument("--tol", type=float, default=1e-7)
    dps.add_argument("--max-iters", type=int, default=1_000_000)
    dps.set_defaults(func=_cmd_dp_solve)

    camp = sub.add_parser("campaign", help="run an instance sweep")
    camp.add_argument("--layout", choices=["two-cluster", "lattice"], default="two-cluster")
    camp.add_argument("--count", type=int, required=True)
    camp.add_argument("--policies", required=True, help="comma-separated policy strings")
    camp.add_argument("--seed", type=int, default=0)
    camp.add_argument("--warmup", type=int, default=10_000)
    camp.add_argument("--horizon", type=int, default=1_000_000)
    camp.add_argument("--with-dp", action="store_true")
    camp.add_argument("--state-limit", type=int, default=1_000_000)
    camp.add_argument("--time-limit", type=float, default=600.0)
    camp.add_argument("--dp-tol", type=float, default=1e-7)
    camp.add_argument("--out", required=True)
    camp.add_argument("--workers", type=int, default=None,
                      help="defaults to the NETSCHED_WORKERS environment variable")
    camp.set_defaults(func=_cmd_campaign)

    agg = sub.add_parser("aggregate", help="summarize a results CSV")
    agg.add_argument("--results", required=True)
    agg.add_argument("--kind", choices=["improvement", "suboptimality"],
                     default="improvement")
    agg.add_argument("--baseline", default="dvo")
    agg.add_argument("--policies", default=None)
    agg.add_argument("--bucket-by", choices=["none", "n", "rho_band", "eta_band"],
                     default="none")
    agg.add_argument("--json", action="store_true")
    agg.set_defaults(func=_cmd_aggregate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
