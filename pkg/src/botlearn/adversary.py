"""Placing a budget of bots to minimize the walk-survival statistic p~ of a degree sequence."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy import sparse

from .graph import DegreeSequence, MultiDigraph, ParameterError
from .sampling import AliasTable

IMPROVEMENT_TOL = 1e-12


class SolverError(RuntimeError):
    pass


def _as_alloc(seq: DegreeSequence, d) -> np.ndarray:
    d = np.asarray(d, dtype=np.int64)
    if d.shape != (seq.n,):
        raise ParameterError(f"allocation has shape {d.shape}, expected ({seq.n},)")
    return d


def objective_ptilde(seq: DegreeSequence, d) -> float:
    """sum_i d_in_A(i) / (d_in_A(i) + d(i)) * d_out(i) / m."""
    d = np.asarray(d, dtype=np.float64)
    if d.shape != (seq.n,):
        raise ParameterError(f"allocation has shape {d.shape}, expected ({seq.n},)")
    a = seq.d_in_a
    return float(np.sum(a / (a + d) * seq.d_out) / seq.m)


def _mu(seq: DegreeSequence) -> np.ndarray:
    return seq.d_out * seq.d_in_a / seq.m


def exchange_delta(seq: DegreeSequence, d, i: int, j: int) -> float:
    """Objective change from moving one bot from agent i to agent j."""
    if i == j:
        raise ParameterError("exchange needs i != j")
    if d[i] < 1:
        raise ParameterError(f"agent {i} holds no bot to move")
    a, mu = seq.d_in_a, _mu(seq)
    si = a[i] + d[i]
    sj = a[j] + d[j]
    return float(mu[i] / ((si - 1) * si) - mu[j] / ((sj + 1) * sj))


# ---------------------------------------------------------------------------
# exact steepest descent


@dataclass
class ExactResult:
    d: np.ndarray
    objective: float
    iterations: int
    trace: list[float] = field(default_factory=list)
    wall_time: float = 0.0


def _best_exchange(seq: DegreeSequence, d: np.ndarray, mu: np.ndarray):
    """Lexicographically first (i, j) among the exchanges with the smallest delta."""
    s = seq.d_in_a + d
    with np.errstate(divide="ignore", invalid="ignore"):
        release = np.where(d >= 1, mu / ((s - 1) * s), np.inf)
    gain = mu / ((s + 1) * s)
    order = np.lexsort((np.arange(d.size), -gain))
    top, second = order[0], order[1] if d.size > 1 else order[0]
    partner = np.full(d.size, top)
    partner[top] = second
    delta = release - gain[partner]
    i = int(np.argmin(delta))  # argmin returns the first minimizer
    if d.size < 2 or not np.isfinite(delta[i]):
        return None
    # ties in gain: smallest j attaining the best gain other than i
    best_gain = gain[partner[i]]
    cand = np.flatnonzero(gain == best_gain)
    j = int(cand[cand != i][0])
    return i, j, float(delta[i])


def exact_solve(seq: DegreeSequence, budget: int, warm_start=None, seed=0) -> ExactResult:
    """Steepest exchange descent from ``warm_start``.

    ``warm_start`` is an allocation with sum ``budget``, "relaxed" (randomized
    rounding of the relaxed solution, the default), or "cold" (all bots on the
    agent with the largest out/in ratio).
    """
    if budget < 0:
        raise ParameterError("budget must be non-negative")
    start = time.perf_counter()
    if budget == 0:
        d = np.zeros(seq.n, dtype=np.int64)
        return ExactResult(d, objective_ptilde(seq, d), 0, [1.0], time.perf_counter() - start)
    if warm_start is None or (isinstance(warm_start, str) and warm_start == "relaxed"):
        d = randomized_round(relaxed_solve(seq, budget), budget, seed).d
    elif isinstance(warm_start, str) and warm_start == "cold":
        d = np.zeros(seq.n, dtype=np.int64)
        d[int(np.argmax(seq.d_out / seq.d_in_a))] = budget
    else:
        d = _as_alloc(seq, warm_start).copy()
        if np.any(d < 0) or d.sum() != budget:
            raise ParameterError("warm start must be non-negative and sum to the budget")

    mu = _mu(seq)
    cap = 10 * budget + 10
    trace = [objective_ptilde(seq, d)]
    iterations = 0
    while True:
        best = _best_exchange(seq, d, mu)
        if best is None or best[2] >= -IMPROVEMENT_TOL:
            break
        if iterations >= cap:
            raise SolverError(f"no convergence within {cap} exchanges")
        i, j, _ = best
        d[i] -= 1
        d[j] += 1
        iterations += 1
        trace.append(objective_ptilde(seq, d))
    return ExactResult(d, trace[-1], iterations, trace, time.perf_counter() - start)


def exhaustive_minimum(seq: DegreeSequence, budget: int) -> tuple[float, np.ndarray]:
    """Brute force over every way to split ``budget`` bots among the agents (tiny n only)."""
    best, arg = math.inf, None
    for d in compositions(budget, seq.n):
        v = objective_ptilde(seq, d)
        if v < best:
            best, arg = v, np.array(d)
    return best, arg


def compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for head in range(total + 1):
        for tail in compositions(total - head, parts - 1):
            yield (head,) + tail


def exchange_optimal(seq: DegreeSequence, d, tol: float = IMPROVEMENT_TOL) -> bool:
    """Check all n(n-1) single exchanges directly; True if none improves by more than tol."""
    d = _as_alloc(seq, d)
    for i in np.flatnonzero(d >= 1):
        for j in range(seq.n):
            if j != i and exchange_delta(seq, d, int(i), j) < -tol:
                return False
    return True


# ---------------------------------------------------------------------------
# continuous relaxation


@dataclass
class RelaxedSolution:
    d_rel: np.ndarray
    h_star: float
    support: np.ndarray  # bool mask of agents with r(i) >= h*^2
    budget: int
    thresholds: np.ndarray  # distinct sqrt(r) values, descending
    h_values: np.ndarray  # h at each threshold


def threshold_value(seq: DegreeSequence, budget: float, x: float) -> float:
    """h(x) = sum_{r >= x^2} sqrt(d_out d_in_A) / (b + sum_{r >= x^2} d_in_A)."""
    r = seq.d_out / seq.d_in_a
    keep = r >= x * x
    return float(np.sqrt(seq.d_out[keep] * seq.d_in_a[keep]).sum() / (budget + seq.d_in_a[keep].sum()))


def relaxed_solve(seq: DegreeSequence, budget: int) -> RelaxedSolution:
    if budget < 1:
        raise ParameterError("relaxation needs a positive budget")
    d_out = seq.d_out.astype(np.float64)
    a = seq.d_in_a.astype(np.float64)
    root_r = np.sqrt(d_out / a)
    order = np.argsort(-root_r, kind="stable")
    num = np.cumsum(np.sqrt(d_out * a)[order])
    den = budget + np.cumsum(a[order])
    # only the last position of each tie group is a valid threshold
    sorted_r = root_r[order]
    last = np.append(sorted_r[1:] != sorted_r[:-1], True)
    thresholds = sorted_r[last]
    h_values = num[last] / den[last]
    k = int(np.argmax(h_values))
    h_star = float(h_values[k])
    support = root_r >= thresholds[k]
    d_rel = np.where(support, a * (root_r / h_star - 1.0), 0.0)
    d_rel = np.maximum(d_rel, 0.0)
    return RelaxedSolution(d_rel, h_star, support, budget, thresholds, h_values)


def kkt_multipliers(seq: DegreeSequence, sol: RelaxedSolution) -> tuple[float, np.ndarray]:
    """Budget multiplier h*^2/m and per-agent non-negativity multipliers (h*^2 - r)_+ / m."""
    r = seq.d_out / seq.d_in_a
    lam = sol.h_star**2 / seq.m
    return lam, np.maximum(sol.h_star**2 - r, 0.0) / seq.m


def kkt_residuals(seq: DegreeSequence, sol: RelaxedSolution) -> dict:
    """Stationarity, complementary slackness and primal feasibility residuals."""
    lam, nu = kkt_multipliers(seq, sol)
    a = seq.d_in_a
    grad = -seq.d_out * a / (seq.m * (a + sol.d_rel) ** 2)
    return {
        "stationarity": float(np.max(np.abs(grad + lam - nu))),
        "complementarity": float(np.max(np.abs(nu * sol.d_rel))),
        "budget": float(abs(sol.d_rel.sum() - sol.budget)),
        "min_d": float(sol.d_rel.min()),
        "min_nu": float(nu.min()),
    }


# ---------------------------------------------------------------------------
# randomized rounding


@dataclass
class RoundedAllocation:
    d: np.ndarray
    draws: np.ndarray  # the index sequence W_1..W_b


def randomized_round(sol: RelaxedSolution, budget: int, seed) -> RoundedAllocation:
    if not np.any(sol.d_rel > 0):
        raise ParameterError("relaxed allocation is identically zero")
    draws = AliasTable(sol.d_rel).sample(np.random.default_rng(seed), budget)
    return RoundedAllocation(np.bincount(draws, minlength=sol.d_rel.size).astype(np.int64), draws)


def gn_value(seq: DegreeSequence, draws) -> float:
    """(1/r_max) sum_j d_out(w_j) / (d_in_A(w_j) + #{k: w_k = w_j})."""
    draws = np.asarray(draws, dtype=np.int64)
    r_max = float(np.max(seq.d_out / seq.d_in_a))
    if draws.size == 0:
        return 0.0
    counts = np.bincount(draws, minlength=seq.n)
    terms = seq.d_out[draws] / (seq.d_in_a[draws] + counts[draws])
    return float(terms.sum() / r_max)


def gn_identity_rhs(seq: DegreeSequence, d) -> float:
    r_max = float(np.max(seq.d_out / seq.d_in_a))
    return seq.m / r_max * (1.0 - objective_ptilde(seq, d))


def gn_leave_one_out(seq: DegreeSequence, draws) -> np.ndarray:
    """g_n(w) - g_n(w without w_i) for every position i."""
    draws = np.asarray(draws, dtype=np.int64)
    full = gn_value(seq, draws)
    return np.array([full - gn_value(seq, np.delete(draws, i)) for i in range(draws.size)])


def c_delta(delta: float) -> float:
    return delta**2 / (4.0 * (2.0 + delta) ** 2)


# ---------------------------------------------------------------------------
# heuristics


class Strategy(str, Enum):
    EXACT = "exact"
    APPROX = "approx"
    UNIFORM = "uniform"
    OUT_DEGREE = "out_degree"
    IN_DEGREE = "in_degree"
    RATIO = "ratio"
    PAGERANK = "pagerank"


HEURISTICS = (Strategy.UNIFORM, Strategy.OUT_DEGREE, Strategy.IN_DEGREE, Strategy.RATIO, Strategy.PAGERANK)


def pagerank_terms(eps: float, rule: str = "tail", tail: float = 0.01) -> int:
    """Highest power J kept in the truncated series.

    "tail": smallest J with (1-eps)^(J+1) <= tail, so the dropped mass is at most ``tail``.
    "literal": keep the first ceil(log(1 - tail) / log(1 - eps)) summands.
    """
    if not 0 < eps < 1:
        raise ParameterError("eps must lie in (0, 1)")
    if rule == "tail":
        return max(0, math.ceil(math.log(tail) / math.log(1.0 - eps)) - 1)
    if rule == "literal":
        return max(0, math.ceil(math.log(1.0 - tail) / math.log(1.0 - eps)) - 1)
    raise ParameterError(f"unknown truncation rule {rule!r}")


def pagerank(graph: MultiDigraph, eps: float = 0.15, rule: str = "tail", tail: float = 0.01) -> np.ndarray:
    """Truncated series (eps/n) 1 sum_{j<=J} (1-eps)^j (P^T)^j over the agent subgraph.

    P is the column-normalized agent adjacency, so a score vector x maps to
    y_i = sum_j x_j mult(i -> j) / d_in(j): influence flows back to whoever is listened to.
    """
    agents = graph.agent_subgraph()
    n = agents.n_agents
    d_in = np.bincount(agents.dst, minlength=n)
    if np.any(d_in == 0):
        raise ParameterError("pagerank needs every agent to have an agent in-neighbour")
    push = sparse.csr_matrix(
        (1.0 / d_in[agents.dst], (agents.src, agents.dst)), shape=(n, n)
    )
    push.sum_duplicates()
    terms = pagerank_terms(eps, rule, tail)
    x = np.full(n, eps / n)
    total = x.copy()
    for _ in range(terms):
        x = (1.0 - eps) * (push @ x)
        total += x
    return total


def heuristic_weights(seq: DegreeSequence, strategy, graph: MultiDigraph | None = None, **pr) -> np.ndarray:
    strategy = Strategy(strategy)
    if strategy is Strategy.UNIFORM:
        return np.ones(seq.n)
    if strategy is Strategy.OUT_DEGREE:
        return seq.d_out.astype(np.float64)
    if strategy is Strategy.IN_DEGREE:
        return seq.d_in_a.astype(np.float64)
    if strategy is Strategy.RATIO:
        return seq.d_out / seq.d_in_a
    if strategy is Strategy.PAGERANK:
        if graph is None:
            raise ParameterError("pagerank needs the agent graph")
        return pagerank(graph, **pr)
    raise ParameterError(f"{strategy.value} is not a heuristic")


def heuristic_allocate(
    seq: DegreeSequence, graph: MultiDigraph | None, budget: int, strategy, seed, **pr
) -> np.ndarray:
    """Draw ``budget`` agents i.i.d. with probability proportional to the strategy's weight."""
    w = heuristic_weights(seq, strategy, graph, **pr)
    draws = AliasTable(w).sample(np.random.default_rng(seed), budget)
    return np.bincount(draws, minlength=seq.n).astype(np.int64)


# ---------------------------------------------------------------------------
# M-convexity probe


def random_allocation(rng: np.random.Generator, n: int, budget: int) -> np.ndarray:
    return np.bincount(rng.integers(0, n, size=budget), minlength=n).astype(np.int64)


def mconvexity_probe(seq: DegreeSequence, budget: int, trials: int, seed) -> dict:
    """Sample (d, d', i) with d(i) > d'(i) and look for a j that satisfies the exchange inequality."""
    rng = np.random.default_rng(seed)
    probes = violations = 0
    worst = math.inf
    for _ in range(trials):
        x = random_allocation(rng, seq.n, budget)
        y = random_allocation(rng, seq.n, budget)
        more = np.flatnonzero(x > y)
        if more.size == 0:
            continue
        i = int(rng.choice(more))
        base = objective_ptilde(seq, x) + objective_ptilde(seq, y)
        best = -math.inf
        for j in np.flatnonzero(y > x):
            x2, y2 = x.copy(), y.copy()
            x2[i] -= 1
            x2[j] += 1
            y2[i] += 1
            y2[j] -= 1
            best = max(best, base - objective_ptilde(seq, x2) - objective_ptilde(seq, y2))
        probes += 1
        worst = min(worst, best)
        if best < -IMPROVEMENT_TOL:
            violations += 1
    return {"probes": probes, "violations": violations, "min_slack": worst}
