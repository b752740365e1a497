"""Social learning with stubborn bots on directed configuration-model graphs."""

from .adversary import (
    Strategy,
    exact_solve,
    exchange_delta,
    gn_value,
    heuristic_allocate,
    mconvexity_probe,
    objective_ptilde,
    pagerank,
    randomized_round,
    relaxed_solve,
)
from .config import ConfigError, ExperimentConfig
from .dynamics import BeliefState, Priors, SignalSource, StoredSignals, belief, signal_average_belief, simulate, step
from .graph import (
    DegreeSequence,
    DegreeStats,
    MultiDigraph,
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
    hit_prob_pair,
    hit_prob_single,
    limit_belief,
    sample_tree,
    y_moments,
)

__version__ = "0.1.0"
