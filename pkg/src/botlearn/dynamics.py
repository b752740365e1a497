"""Beta-parameter belief updates on a multigraph with stubborn bots."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from .graph import MultiDigraph


class ContractError(ValueError):
    pass


def listen_matrix(graph: MultiDigraph) -> sparse.csr_matrix:
    """W[i, j] = mult(j -> i) / d_in(i), so (W @ x)[i] is the in-neighbour average of x."""
    d_in = graph.in_degree()
    if np.any(d_in == 0):
        raise ContractError("every node needs at least one in-neighbour")
    n = graph.n_nodes
    w = sparse.csr_matrix(
        (1.0 / d_in[graph.dst], (graph.dst, graph.src)), shape=(n, n), dtype=np.float64
    )
    w.sum_duplicates()
    return w


# ---------------------------------------------------------------------------
# signals


class SignalSource:
    """Bernoulli(theta) signals for agents, zeros for bots.

    The draw for step t comes from a generator keyed on (seed, t), and node i
    reads the i-th uniform, so s_t(i) does not depend on how many nodes follow i.
    """

    def __init__(self, theta: float, seed: int, n_agents: int, n_nodes: int):
        if not 0 <= theta <= 1:
            raise ValueError("theta must lie in [0, 1]")
        self.theta = theta
        self.seed = seed
        self.n_agents = n_agents
        self.n_nodes = n_nodes

    def at(self, t: int) -> np.ndarray:
        if t < 1:
            raise ValueError("signals are indexed from t = 1")
        u = np.random.default_rng([self.seed, t]).random(self.n_agents)
        s = np.zeros(self.n_nodes)
        s[: self.n_agents] = u < self.theta
        return s

    def horizon(self) -> float:
        return np.inf


class StoredSignals:
    """Explicit (T, n_nodes) 0/1 array; row t-1 holds s_t."""

    def __init__(self, values):
        self.values = np.asarray(values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("stored signals must be a 2-d array")

    @classmethod
    def record(cls, source, horizon: int) -> "StoredSignals":
        return cls(np.stack([source.at(t) for t in range(1, horizon + 1)]))

    def at(self, t: int) -> np.ndarray:
        if not 1 <= t <= self.values.shape[0]:
            raise ValueError(f"no stored signal for t = {t}")
        return self.values[t - 1]

    def horizon(self) -> float:
        return self.values.shape[0]


# ---------------------------------------------------------------------------
# state


@dataclass(frozen=True)
class Priors:
    """Prior bounds and initial agent parameters; bots always start at (0, beta_bar)."""

    alpha_bar: float = 1.0
    beta_bar: float = 1.0
    alpha0: float | np.ndarray = 1.0
    beta0: float | np.ndarray = 1.0

    def initial(self, graph: MultiDigraph) -> tuple[np.ndarray, np.ndarray]:
        n = graph.n_agents
        alpha = np.zeros(graph.n_nodes)
        beta = np.full(graph.n_nodes, float(self.beta_bar))
        alpha[:n] = self.alpha0
        beta[:n] = self.beta0
        if np.any(alpha[:n] < 0) or np.any(alpha[:n] > self.alpha_bar):
            raise ValueError("agent alpha0 must lie in [0, alpha_bar]")
        if np.any(beta[:n] < 0) or np.any(beta[:n] > self.beta_bar):
            raise ValueError("agent beta0 must lie in [0, beta_bar]")
        return alpha, beta


@dataclass
class BeliefState:
    alpha: np.ndarray
    beta: np.ndarray
    t: int = 0

    def belief(self) -> np.ndarray:
        return belief(self.alpha, self.beta)


def belief(alpha, beta):
    """alpha / (alpha + beta), with 0.5 where both vanish."""
    alpha = np.asarray(alpha, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    total = alpha + beta
    out = np.full(np.broadcast(alpha, beta).shape, 0.5)
    np.divide(alpha, total, out=out, where=total > 0)
    return out if out.ndim else float(out)


def step(state: BeliefState, listen: sparse.csr_matrix, signals: np.ndarray, eta: float) -> BeliefState:
    keep = 1.0 - eta
    alpha = keep * (state.alpha + signals) + eta * (listen @ state.alpha)
    beta = keep * (state.beta + (1.0 - signals)) + eta * (listen @ state.beta)
    return BeliefState(alpha, beta, state.t + 1)


def _checked(signals: np.ndarray, n_agents: int) -> np.ndarray:
    # bots must see s = 0 for their beta to grow by exactly (1 - eta) per step
    if np.any(signals[n_agents:] != 0):
        raise ContractError("bot signals must be zero")
    return signals


# ---------------------------------------------------------------------------
# simulation


@dataclass
class SimulationResult:
    mean_belief: np.ndarray  # (T+1,) mean over agents
    std_belief: np.ndarray
    tracked: np.ndarray  # node ids
    trajectories: np.ndarray  # (T+1, len(tracked))
    final: BeliefState
    nonlearning_count: int
    epsilon: float
    extras: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.mean_belief.size - 1


def simulate(
    graph: MultiDigraph,
    theta: float,
    eta: float,
    horizon: int,
    priors: Priors = Priors(),
    seed: int = 0,
    track=None,
    epsilon: float = 0.1,
    signals=None,
) -> SimulationResult:
    """Run ``horizon`` synchronous updates; ``track`` is an id list, ``"all"`` or None."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if not 0 <= eta <= 1:
        raise ValueError("eta must lie in [0, 1]")
    if signals is None:
        signals = SignalSource(theta, seed, graph.n_agents, graph.n_nodes)
    if signals.horizon() < horizon:
        raise ValueError("signal stream shorter than the horizon")
    listen = listen_matrix(graph)
    n = graph.n_agents
    if track is None:
        tracked = np.zeros(0, dtype=np.int64)
    elif isinstance(track, str) and track == "all":
        tracked = np.arange(graph.n_nodes)
    else:
        tracked = np.asarray(track, dtype=np.int64).reshape(-1)

    alpha, beta = priors.initial(graph)
    state = BeliefState(alpha, beta, 0)
    means = np.empty(horizon + 1)
    stds = np.empty(horizon + 1)
    traj = np.empty((horizon + 1, tracked.size))

    b = state.belief()
    means[0], stds[0], traj[0] = b[:n].mean(), b[:n].std(), b[tracked]
    for t in range(1, horizon + 1):
        state = step(state, listen, _checked(signals.at(t), n), eta)
        b = state.belief()
        means[t], stds[t], traj[t] = b[:n].mean(), b[:n].std(), b[tracked]

    return SimulationResult(
        mean_belief=means,
        std_belief=stds,
        tracked=tracked,
        trajectories=traj,
        final=state,
        nonlearning_count=int(np.count_nonzero(b[:n] > epsilon)),
        epsilon=epsilon,
    )


# ---------------------------------------------------------------------------
# signal average and its envelope


@dataclass
class SignalAverage:
    value: np.ndarray  # signal average per requested node
    lower: np.ndarray
    upper: np.ndarray
    nodes: np.ndarray

    def violations(self, beliefs: np.ndarray, rtol: float = 1e-9) -> int:
        """Count nodes whose belief leaves [lower, upper] by more than rtol (relative)."""
        slack_lo = self.lower - beliefs
        slack_hi = beliefs - self.upper
        tol = rtol * np.maximum(1.0, np.abs(beliefs))
        return int(np.count_nonzero((slack_lo > tol) | (slack_hi > tol)))


def _envelope(value, horizon, eta, alpha_bar, beta_bar):
    scale = (1.0 - eta) * horizon
    lower = value / (1.0 + (alpha_bar + beta_bar) / scale)
    upper = value + alpha_bar / scale
    return lower, upper


def signal_average_belief(
    graph: MultiDigraph,
    signals,
    horizon: int,
    eta: float,
    nodes=None,
    alpha_bar: float = 1.0,
    beta_bar: float = 1.0,
    chunk: int = 256,
) -> SignalAverage:
    """Signal average (1/T) sum_t s_{T-t} Q^t e_i for each node in ``nodes``.

    Works per node by pushing the unit column e_i through Q = (1-eta) I + eta P
    one step at a time, with P the column-normalized adjacency.
    """
    if not eta < 1:
        raise ValueError("the envelope needs eta < 1")
    if signals.horizon() < horizon:
        raise ValueError("signal stream shorter than the horizon")
    listen = listen_matrix(graph)
    push = listen.T.tocsr()  # P as a csr matrix: P[j, i] = mult(j -> i) / d_in(i)
    nodes = np.arange(graph.n_nodes) if nodes is None else np.asarray(nodes, dtype=np.int64).reshape(-1)
    stream = np.stack([signals.at(t) for t in range(1, horizon + 1)])  # row t-1 = s_t

    value = np.empty(nodes.size)
    for start in range(0, nodes.size, chunk):
        block = nodes[start : start + chunk]
        w = np.zeros((graph.n_nodes, block.size))
        w[block, np.arange(block.size)] = 1.0
        acc = np.zeros(block.size)
        for t in range(horizon):
            acc += stream[horizon - 1 - t] @ w
            w = (1.0 - eta) * w + eta * (push @ w)
        value[start : start + chunk] = acc / horizon
    lower, upper = _envelope(value, horizon, eta, alpha_bar, beta_bar)
    return SignalAverage(value, lower, upper, nodes)


def signal_average_all(graph: MultiDigraph, signals, horizon: int, eta: float) -> np.ndarray:
    """Same quantity for every node at once, by Horner's rule on row vectors."""
    listen = listen_matrix(graph)
    x = np.zeros(graph.n_nodes)
    for t in range(1, horizon + 1):
        x = (1.0 - eta) * x + eta * (listen @ x) + signals.at(t)
    return x / horizon
