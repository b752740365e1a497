"""Command line entry point. Outputs go to --out; wall-clock times go to timing.json only."""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import adversary as adv
from . import io
from .config import ConfigError, ExperimentConfig
from .dynamics import Priors, SignalSource, signal_average_all, simulate
from .experiment import (
    REGIMES,
    prepare_workload,
    run_experiment,
    scatter_ptilde_vs_belief,
    theory_convergence_run,
)
from .graph import (
    ParameterError,
    SnapParseError,
    assumption_check,
    attach_bots,
    build_dcm,
    degree_stats,
    generate_degree_sequence,
    load_snap,
)
from .theory import (
    DegreeLaw,
    LimitSpec,
    Regime,
    closed_form_mean,
    conditional_mean_belief,
    limit_belief,
    sample_forest,
)

EXIT_OK, EXIT_CONFIG, EXIT_IO = 0, 2, 3


def _load_sequence(args):
    """Degree sequence and, when available, the agent graph."""
    if getattr(args, "snap", None):
        snap = load_snap(args.snap)
        return snap.sequence, snap.graph
    if getattr(args, "graph", None):
        graph = io.read_graph(args.graph).agent_subgraph()
        return graph.realized_sequence(), graph
    if getattr(args, "degrees", None):
        return io.read_degrees(args.degrees, strict=False), None
    raise ConfigError("give --degrees, --graph or --snap")


def _budget(args, seq) -> int:
    if (args.budget is None) == (args.budget_fraction is None):
        raise ConfigError("give exactly one of --budget and --budget-fraction")
    b = args.budget if args.budget is not None else math.ceil(args.budget_fraction * seq.m)
    if b < 1 or b > seq.m:
        raise ConfigError(f"budget {b} outside [1, {seq.m}]")
    return b


# ---------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> None:
    seq = generate_degree_sequence(args.n, args.lambda_a, args.p_target, args.seed)
    out = Path(args.out)
    io.write_degrees(out / "degrees.csv", seq)
    if args.build_graph:
        graph, trace, i_star = build_dcm(seq, args.seed)
        io.write_graph(
            out / "graph", graph, args.seed,
            {"i_star": i_star, "tau": trace.tau_label(args.horizon), "horizon": args.horizon},
        )


def cmd_stats(args) -> None:
    seq, _ = _load_sequence(args)
    alloc = io.read_allocation(args.alloc, seq.n) if args.alloc else None
    st = degree_stats(seq, alloc)
    report = {"stats": st.as_dict(), "assumptions": assumption_check(seq, args.horizon)}
    io.write_json(Path(args.out) / "stats.json", report)


def cmd_allocate(args) -> None:
    seq, graph = _load_sequence(args)
    seq = seq.with_bots(np.zeros(seq.n, dtype=np.int64))
    b = _budget(args, seq)
    strategy = adv.Strategy(args.strategy)
    report = {"strategy": strategy.value, "budget": b, "seed": args.seed}
    if strategy is adv.Strategy.EXACT:
        res = adv.exact_solve(seq, b, args.warm_start, seed=args.seed)
        d, report["iterations"], wall = res.d, res.iterations, res.wall_time
    elif strategy is adv.Strategy.APPROX:
        start = time.perf_counter()
        rel = adv.relaxed_solve(seq, b)
        d = adv.randomized_round(rel, b, args.seed).d
        wall = time.perf_counter() - start
        report["iterations"] = 0
        report["h_star"] = rel.h_star
    else:
        if strategy is adv.Strategy.PAGERANK and graph is None:
            raise ConfigError("pagerank needs --graph or --snap")
        start = time.perf_counter()
        d = adv.heuristic_allocate(seq, graph, b, strategy, args.seed, eps=args.pagerank_eps, rule=args.pagerank_rule)
        wall = time.perf_counter() - start
        report["iterations"] = 0
    report["objective"] = adv.objective_ptilde(seq, d)
    out = Path(args.out)
    io.write_allocation(out / "allocation.csv", d)
    io.write_json(out / "report.json", report)
    io.write_json(out / "timing.json", {"wall_time": wall})


def cmd_simulate(args) -> None:
    if args.snap:
        graph = load_snap(args.snap).graph
    elif args.graph:
        graph = io.read_graph(args.graph)
    else:
        raise ConfigError("give --graph or --snap")
    if args.alloc:
        graph = attach_bots(graph, io.read_allocation(args.alloc, graph.n_agents))
    if not (0 < args.theta < 1 and 0 < args.eta < 1 and args.horizon >= 1):
        raise ConfigError("need theta, eta in (0, 1) and horizon >= 1")
    track = [int(x) for x in args.track.split(",")] if args.track else None
    if track and (min(track) < 0 or max(track) >= graph.n_nodes):
        raise ConfigError("tracked node out of range")
    priors = Priors(args.alpha_bar, args.beta_bar, args.alpha_bar, args.beta_bar)
    signals = SignalSource(args.theta, args.seed, graph.n_agents, graph.n_nodes)
    sim = simulate(graph, args.theta, args.eta, args.horizon, priors, track=track, epsilon=args.epsilon, signals=signals)
    value = signal_average_all(graph, signals, args.horizon, args.eta)
    scale = (1 - args.eta) * args.horizon
    lower = value / (1 + (args.alpha_bar + args.beta_bar) / scale)
    upper = value + args.alpha_bar / scale
    final = sim.final.belief()
    tol = 1e-9 * np.maximum(1.0, final)
    violations = int(np.count_nonzero((lower - final > tol) | (final - upper > tol)))
    out = Path(args.out)
    io.write_csv(out / "trajectory.csv", io.TRAJECTORY_HEADER, io.trajectory_rows(sim))
    io.write_json(
        out / "summary.json",
        {
            "final_mean_belief": sim.mean_belief[-1],
            "sandwich_violations": violations,
            "nonlearning_count": sim.nonlearning_count,
            "epsilon": args.epsilon,
            "n_agents": graph.n_agents,
            "n_bots": graph.n_bots,
            "seed": args.seed,
        },
    )


def cmd_theory(args) -> None:
    out = Path(args.out)
    if args.regime:
        rows = theory_convergence_run(
            args.lambda_a, args.regime, range(args.t_min, args.horizon + 1), args.trials,
            args.theta, args.eta, args.seed,
        )
        io.write_csv(
            out / "convergence.csv",
            [f.name for f in dataclasses.fields(rows[0].__class__)] if rows else ["horizon"],
            ([getattr(r, f.name) for f in dataclasses.fields(r)] for r in rows),
        )
        return
    if args.degrees:
        seq = io.read_degrees(args.degrees, strict=False)
    else:
        seq = generate_degree_sequence(args.n, args.lambda_a, args.p_target, args.seed)
    st = degree_stats(seq)
    T = args.horizon
    forest = sample_forest(DegreeLaw.from_sequence(seq), T - 1, args.trials, args.seed)
    values = conditional_mean_belief(forest, args.theta, args.eta, T)
    c = T * (1 - st.p)
    limits = {
        "vanishing": limit_belief(LimitSpec(Regime.VANISHING, args.theta, args.eta)),
        "finite": limit_belief(LimitSpec(Regime.FINITE, args.theta, args.eta, c=c)) if c > 0 else None,
        "diverging": limit_belief(LimitSpec(Regime.DIVERGING, args.theta, args.eta)),
    }
    io.write_json(
        out / "theory.json",
        {
            "stats": st.as_dict(),
            "T": T,
            "c": c,
            "closed_form_mean": closed_form_mean(st, args.theta, args.eta, T),
            "limit_belief": limits,
            "mc_mean": float(values.mean()),
            "mc_se": float(values.std(ddof=1) / math.sqrt(values.size)) if values.size > 1 else None,
            "trials": args.trials,
            "seed": args.seed,
        },
    )


def cmd_experiment(args) -> None:
    cfg = ExperimentConfig.load(args.config)
    records = run_experiment(cfg, prepare_workload(cfg))
    out = Path(args.out)
    io.write_records(out / "records.csv", records)
    io.write_record_trajectories(out / "trajectories.csv", records)
    io.write_json(out / "config.json", cfg.to_dict())
    io.write_json(
        out / "timing.json",
        {f"{r.strategy}/{r.trial}": r.wall_time for r in records},
    )


def cmd_scatter(args) -> None:
    records = io.read_records(args.records)
    sc = scatter_ptilde_vs_belief(records, args.y)
    out = Path(args.out)
    io.write_csv(out / "scatter.csv", ("ptilde", args.y), zip(sc.x, sc.y))
    io.write_json(
        out / "scatter.json",
        {"pearson_r": sc.pearson_r, "defined": sc.pearson_r is not None, "n": int(sc.x.size), "y": args.y},
    )


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="botlearn", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, inputs=True):
        sp.add_argument("--out", required=True, help="results directory")
        sp.add_argument("--seed", type=int, default=0)
        if inputs:
            sp.add_argument("--degrees", help="degree CSV (agent_id,d_out,d_in_A,d_in_B)")
            sp.add_argument("--graph", help="graph stem: reads STEM.csv and STEM.json")
            sp.add_argument("--snap", help="SNAP edge list")

    g = sub.add_parser("generate", help="draw a degree sequence (and optionally a DCM graph)")
    common(g, inputs=False)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--lambda-a", type=float, default=2.1)
    g.add_argument("--p-target", type=float, default=1.0)
    g.add_argument("--build-graph", action="store_true")
    g.add_argument("--horizon", type=int, default=10, help="horizon used to report tau")
    g.set_defaults(func=cmd_generate)

    s = sub.add_parser("stats", help="walk statistics and moment diagnostics")
    common(s)
    s.add_argument("--alloc", help="allocation CSV overriding d_in_B")
    s.add_argument("--horizon", type=int, default=1)
    s.set_defaults(func=cmd_stats)

    a = sub.add_parser("allocate", help="place a bot budget")
    common(a)
    a.add_argument("--strategy", required=True, choices=[x.value for x in adv.Strategy])
    a.add_argument("--budget", type=int)
    a.add_argument("--budget-fraction", type=float)
    a.add_argument("--warm-start", default="relaxed", choices=["relaxed", "cold"])
    a.add_argument("--pagerank-eps", type=float, default=0.15)
    a.add_argument("--pagerank-rule", default="tail", choices=["tail", "literal"])
    a.set_defaults(func=cmd_allocate)

    m = sub.add_parser("simulate", help="run the belief dynamics")
    common(m)
    m.add_argument("--alloc", help="allocation CSV; bots are attached to the agent graph")
    m.add_argument("--theta", type=float, default=0.5)
    m.add_argument("--eta", type=float, default=0.9)
    m.add_argument("--horizon", type=int, default=101)
    m.add_argument("--track", help="comma separated node ids")
    m.add_argument("--epsilon", type=float, default=0.1)
    m.add_argument("--alpha-bar", type=float, default=1.0)
    m.add_argument("--beta-bar", type=float, default=1.0)
    m.set_defaults(func=cmd_simulate)

    t = sub.add_parser("theory", help="closed-form vs sampled-tree expected belief, or a regime sweep")
    common(t)
    t.add_argument("--n", type=int, default=10_000)
    t.add_argument("--lambda-a", type=float, default=2.1)
    t.add_argument("--p-target", type=float, default=0.9)
    t.add_argument("--theta", type=float, default=0.5)
    t.add_argument("--eta", type=float, default=0.9)
    t.add_argument("--horizon", type=int, default=10)
    t.add_argument("--trials", type=int, default=1000)
    t.add_argument("--regime", choices=sorted(REGIMES), help="sweep T from --t-min to --horizon")
    t.add_argument("--t-min", type=int, default=2)
    t.set_defaults(func=cmd_theory)

    e = sub.add_parser("experiment", help="strategy comparison from a JSON config")
    e.add_argument("--config", required=True)
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_experiment)

    c = sub.add_parser("scatter", help="p~ against final belief with Pearson r")
    c.add_argument("--records", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--y", default="belief_i_star", choices=["belief_i_star", "final_mean_belief"])
    c.set_defaults(func=cmd_scatter)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        args.func(args)
    except (ConfigError, ParameterError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, SnapParseError, io.DataFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
