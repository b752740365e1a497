"""Experiment pipelines: strategy comparison, tree-limit convergence, correlation scatter."""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import adversary as adv
from .adversary import Strategy
from .config import ConfigError, ExperimentConfig
from .dynamics import Priors, SignalSource, simulate
from .graph import (
    DegreeSequence,
    MultiDigraph,
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
    TreeTooLarge,
    closed_form_mean,
    conditional_mean_belief,
    limit_belief,
    sample_forest,
)


def derive_seed(*path: int) -> int:
    """Stable 63-bit seed for a position in the seed tree."""
    return int(np.random.SeedSequence(list(path)).generate_state(2, dtype=np.uint64)[0] >> np.uint64(1))


# stream ids below the experiment seed
_GRAPH, _TRIAL = 0, 1
_ISTAR, _SIGNALS, _ALLOC = 0, 1, 2


@dataclass
class ResultRecord:
    strategy: str
    trial: int
    seed_chain: str
    alloc_seed: int
    signal_seed: int
    i_star: int
    budget: int
    ptilde: float
    final_mean_belief: float
    belief_i_star: float
    nonlearning_count: int
    iterations: int
    mean_trajectory: np.ndarray = field(repr=False)
    std_trajectory: np.ndarray = field(repr=False)
    i_star_trajectory: np.ndarray = field(repr=False)
    wall_time: float = 0.0

    def row(self) -> dict:
        return {
            "strategy": self.strategy,
            "trial": self.trial,
            "seed_chain": self.seed_chain,
            "alloc_seed": self.alloc_seed,
            "signal_seed": self.signal_seed,
            "i_star": self.i_star,
            "budget": self.budget,
            "ptilde": self.ptilde,
            "final_mean_belief": self.final_mean_belief,
            "belief_i_star": self.belief_i_star,
            "nonlearning_count": self.nonlearning_count,
            "iterations": self.iterations,
        }


@dataclass
class Workload:
    graph: MultiDigraph  # agents only
    sequence: DegreeSequence  # d_in_b = 0
    source: str


def prepare_workload(cfg: ExperimentConfig) -> Workload:
    if cfg.dataset is not None:
        snap = load_snap(cfg.dataset)
        return Workload(snap.graph, snap.sequence, cfg.dataset)
    syn = cfg.synthetic
    seed = derive_seed(cfg.seed, _GRAPH)
    seq = generate_degree_sequence(syn.n, syn.lambda_a, 1.0, seed)
    graph, _, _ = build_dcm(seq, seed)
    return Workload(graph, seq, f"dcm(n={syn.n}, lambda_a={syn.lambda_a}, seed={cfg.seed})")


def allocate(
    strategy: Strategy,
    seq: DegreeSequence,
    graph: MultiDigraph,
    budget: int,
    seed: int,
    cfg: ExperimentConfig,
    exact_cache: dict,
) -> tuple[np.ndarray, int]:
    """Returns (allocation, solver iterations)."""
    if strategy is Strategy.EXACT:
        # the optimum value is unique; cache per warm-start seed is not needed
        if "exact" not in exact_cache:
            res = adv.exact_solve(seq, budget, cfg.warm_start, seed=derive_seed(cfg.seed, _GRAPH, _ALLOC))
            exact_cache["exact"] = res
        res = exact_cache["exact"]
        return res.d.copy(), res.iterations
    if strategy is Strategy.APPROX:
        rel = adv.relaxed_solve(seq, budget)
        return adv.randomized_round(rel, budget, seed).d, 0
    d = adv.heuristic_allocate(
        seq, graph, budget, strategy, seed, eps=cfg.pagerank_eps, rule=cfg.pagerank_rule
    )
    return d, 0


def run_experiment(cfg: ExperimentConfig, workload: Workload | None = None) -> list[ResultRecord]:
    """Every (strategy, trial): allocate bots, attach them, simulate, record.

    Within a trial all strategies share i* and the agents' signal stream.
    """
    work = workload or prepare_workload(cfg)
    seq, graph = work.sequence, work.graph
    budget = cfg.resolve_budget(seq.m)
    priors = Priors(cfg.alpha_bar, cfg.beta_bar, cfg.alpha_bar, cfg.beta_bar)
    exact_cache: dict = {}
    records = []
    for trial in range(cfg.trials):
        i_star = int(np.random.default_rng(derive_seed(cfg.seed, _TRIAL, trial, _ISTAR)).integers(seq.n))
        signal_seed = derive_seed(cfg.seed, _TRIAL, trial, _SIGNALS)
        for k, name in enumerate(cfg.strategies):
            strategy = Strategy(name)
            alloc_seed = derive_seed(cfg.seed, _TRIAL, trial, _ALLOC, k)
            start = time.perf_counter()
            d, iterations = allocate(strategy, seq, graph, budget, alloc_seed, cfg, exact_cache)
            with_bots = attach_bots(graph, d)
            signals = SignalSource(cfg.theta, signal_seed, with_bots.n_agents, with_bots.n_nodes)
            sim = simulate(
                with_bots, cfg.theta, cfg.eta, cfg.horizon, priors,
                track=[i_star], epsilon=cfg.epsilon, signals=signals,
            )
            records.append(
                ResultRecord(
                    strategy=strategy.value,
                    trial=trial,
                    seed_chain=f"{cfg.seed}/trial={trial}/strategy={k}",
                    alloc_seed=alloc_seed,
                    signal_seed=signal_seed,
                    i_star=i_star,
                    budget=budget,
                    ptilde=adv.objective_ptilde(seq, d),
                    final_mean_belief=float(sim.mean_belief[-1]),
                    belief_i_star=float(sim.trajectories[-1, 0]),
                    nonlearning_count=sim.nonlearning_count,
                    iterations=iterations,
                    mean_trajectory=sim.mean_belief,
                    std_trajectory=sim.std_belief,
                    i_star_trajectory=sim.trajectories[:, 0],
                    wall_time=time.perf_counter() - start,
                )
            )
    records.sort(key=lambda r: (r.strategy, r.trial))
    return records


# ---------------------------------------------------------------------------
# scatter


@dataclass
class Scatter:
    x: np.ndarray
    y: np.ndarray
    pearson_r: float | None  # None when a column is constant


def pearson(x, y) -> float | None:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    dx, dy = x - x.mean(), y - y.mean()
    denom = math.sqrt(float(dx @ dx) * float(dy @ dy))
    if denom == 0:
        return None
    return float(dx @ dy / denom)


def scatter_ptilde_vs_belief(records, y_field: str = "belief_i_star") -> Scatter:
    if len(records) < 3:
        raise ConfigError("need at least 3 records for a correlation")
    x = np.array([r["ptilde"] if isinstance(r, dict) else r.ptilde for r in records], dtype=np.float64)
    y = np.array([r[y_field] if isinstance(r, dict) else getattr(r, y_field) for r in records], dtype=np.float64)
    return Scatter(x, y, pearson(x, y))


# ---------------------------------------------------------------------------
# tree-limit convergence


# regime -> (constant, exponent) with p_n = 1 - constant * T^exponent; exponent 0 keeps p fixed
REGIMES = {
    "constant": (0.1, 0.0),
    "diverging": (1.3, -0.5),
    "finite": (1.9, -1.0),
    "vanishing": (2.7, -1.5),
}


def regime_p(regime: str, horizon: int) -> float:
    const, expo = REGIMES[regime]
    return 1.0 - const * horizon**expo


def regime_limit(regime: str, theta: float, eta: float) -> float:
    if regime in ("constant", "diverging"):
        return limit_belief(LimitSpec(Regime.DIVERGING, theta, eta))
    if regime == "vanishing":
        return limit_belief(LimitSpec(Regime.VANISHING, theta, eta))
    return limit_belief(LimitSpec(Regime.FINITE, theta, eta, c=REGIMES["finite"][0]))


@dataclass
class ConvergenceRow:
    horizon: int
    n: int
    p_n: float
    limit: float
    mean_value: float
    mean_error: float
    var_error: float
    mean_ptilde: float
    mean_closed_form: float
    trials: int


def theory_convergence_run(
    lambda_a: float,
    regime: str,
    horizons,
    trials: int,
    theta: float = 0.5,
    eta: float = 0.9,
    seed: int = 0,
    n_cap: int = 5_000_000,
    node_cap: int = 10_000_000,
) -> list[ConvergenceRow]:
    """Per horizon T: n = ceil(lambda_a^(2T)) agents, one fresh sequence and tree per trial."""
    if regime not in REGIMES:
        raise ConfigError(f"unknown regime {regime!r}")
    limit = regime_limit(regime, theta, eta)
    rows = []
    for T in horizons:
        n = math.ceil(lambda_a ** (2 * T))
        if n > n_cap:
            warnings.warn(f"horizon {T} needs n={n} > cap {n_cap}; stopping the sweep here")
            break
        p_n = regime_p(regime, T)
        values, ptildes, closed = [], [], []
        try:
            for k in range(trials):
                s = derive_seed(seed, T, k)
                seq = generate_degree_sequence(n, lambda_a, p_n, s)
                tree = sample_forest(DegreeLaw.from_sequence(seq), T - 1, 1, s, node_cap)
                values.append(float(conditional_mean_belief(tree, theta, eta, T)[0]))
                st = degree_stats(seq)
                ptildes.append(st.p)
                closed.append(closed_form_mean(st, theta, eta, T))
        except TreeTooLarge as exc:
            warnings.warn(f"horizon {T}: {exc}; stopping the sweep here")
            break
        err = np.abs(np.array(values) - limit)
        rows.append(
            ConvergenceRow(
                horizon=T, n=n, p_n=p_n, limit=limit,
                mean_value=float(np.mean(values)),
                mean_error=float(err.mean()),
                var_error=float(err.var(ddof=1)) if trials > 1 else 0.0,
                mean_ptilde=float(np.mean(ptildes)),
                mean_closed_form=float(np.mean(closed)),
                trials=trials,
            )
        )
    return rows
