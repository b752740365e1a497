"""Degree sequences, directed configuration-model construction and degree statistics.

Node ids: agents are 0..n-1, bots follow at n..n+n_bots-1. An edge u -> v
means v listens to u.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class ParameterError(ValueError):
    pass


class SnapParseError(ValueError):
    pass


@dataclass(frozen=True)
class DegreeSequence:
    """Per-agent (out, agent in, bot in) degree triples.

    ``strict`` sequences satisfy the generative contract: every agent has
    out- and agent-in-degree at least 1 and the stub totals balance. Edge
    lists read from disk may have sink agents (out-degree 0), so they are
    built with ``strict=False``.
    """

    d_out: np.ndarray
    d_in_a: np.ndarray
    d_in_b: np.ndarray
    strict: bool = True

    def __post_init__(self):
        for name in ("d_out", "d_in_a", "d_in_b"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        n = self.d_out.size
        if self.d_in_a.size != n or self.d_in_b.size != n:
            raise ParameterError("degree arrays must have equal length")
        if n == 0:
            raise ParameterError("empty degree sequence")
        if np.any(self.d_out < 0) or np.any(self.d_in_b < 0) or np.any(self.d_in_a < 1):
            raise ParameterError("degrees out of range")
        if self.strict:
            if np.any(self.d_out < 1):
                raise ParameterError("every agent needs out-degree >= 1")
            if self.d_out.sum() != self.d_in_a.sum():
                raise ParameterError("sum of out-degrees must equal sum of agent in-degrees")

    @property
    def n(self) -> int:
        return int(self.d_out.size)

    @property
    def m(self) -> int:
        return int(self.d_out.sum())

    @property
    def n_bots(self) -> int:
        return int(self.d_in_b.sum())

    def with_bots(self, d_in_b) -> "DegreeSequence":
        return DegreeSequence(self.d_out, self.d_in_a, np.asarray(d_in_b), strict=self.strict)


def generate_degree_sequence(n: int, lambda_a: float, p_target: float, seed) -> DegreeSequence:
    if n < 1:
        raise ParameterError("n must be positive")
    if not lambda_a > 1:
        raise ParameterError("lambda_a must exceed 1")
    if not 0 < p_target <= 1:
        raise ParameterError("p_target must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    d_in_a = 1 + rng.poisson(lambda_a - 1, size=n)
    extra = int(d_in_a.sum()) - n
    d_out = 1 + np.bincount(rng.integers(0, n, size=extra), minlength=n)
    lambda_b = lambda_a * (1 - p_target) / p_target
    d_in_b = rng.poisson(lambda_b, size=n) if lambda_b > 0 else np.zeros(n, dtype=np.int64)
    return DegreeSequence(d_out, d_in_a, d_in_b)


# ---------------------------------------------------------------------------
# multigraph


@dataclass(frozen=True)
class MultiDigraph:
    """Edge list with repeats; multiplicity is the number of repeats."""

    n_agents: int
    n_bots: int
    src: np.ndarray
    dst: np.ndarray

    def __post_init__(self):
        for name in ("src", "dst"):
            arr = np.asarray(getattr(self, name), dtype=np.int64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_nodes(self) -> int:
        return self.n_agents + self.n_bots

    @property
    def n_edges(self) -> int:
        return int(self.src.size)

    def is_bot(self) -> np.ndarray:
        mask = np.zeros(self.n_nodes, dtype=bool)
        mask[self.n_agents:] = True
        return mask

    def in_degree(self) -> np.ndarray:
        return np.bincount(self.dst, minlength=self.n_nodes)

    def out_degree(self) -> np.ndarray:
        return np.bincount(self.src, minlength=self.n_nodes)

    def edge_multiset(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Distinct (src, dst) pairs sorted lexicographically, with multiplicities."""
        key = self.src * self.n_nodes + self.dst
        uniq, mult = np.unique(key, return_counts=True)
        return uniq // self.n_nodes, uniq % self.n_nodes, mult

    def realized_sequence(self) -> DegreeSequence:
        """Recount agent degree triples from the edges (bots are not agents)."""
        n = self.n_agents
        from_agent = self.src < n
        to_agent = self.dst < n
        d_out = np.bincount(self.src[from_agent & to_agent], minlength=n)[:n]
        d_in_a = np.bincount(self.dst[from_agent & to_agent], minlength=n)[:n]
        d_in_b = np.bincount(self.dst[~from_agent & to_agent], minlength=n)[:n]
        return DegreeSequence(d_out, d_in_a, d_in_b, strict=False)

    def agent_subgraph(self) -> "MultiDigraph":
        keep = (self.src < self.n_agents) & (self.dst < self.n_agents)
        return MultiDigraph(self.n_agents, 0, self.src[keep], self.dst[keep])


def attach_bots(graph: MultiDigraph, d_in_b) -> MultiDigraph:
    """Append bots to an agent graph: each bot gets a self-loop and one edge to its target.

    Bots are numbered sequentially in agent order.
    """
    base = graph.agent_subgraph()
    d_in_b = np.asarray(d_in_b, dtype=np.int64)
    if d_in_b.size != base.n_agents or np.any(d_in_b < 0):
        raise ParameterError("bot allocation must be a non-negative vector over agents")
    n_bots = int(d_in_b.sum())
    bots = base.n_agents + np.arange(n_bots)
    targets = np.repeat(np.arange(base.n_agents), d_in_b)
    src = np.concatenate([base.src, bots, bots])
    dst = np.concatenate([base.dst, bots, targets])
    return MultiDigraph(base.n_agents, n_bots, src, dst)


@dataclass
class ConstructionTrace:
    """BFS bookkeeping of a DCM build started at ``i_star``.

    ``tau`` is the BFS level at which an outstub of an agent already in the
    graph was first sampled (``math.inf`` if that never happened). Layers
    only cover the component grown from ``i_star``.
    """

    i_star: int
    tau: float = math.inf
    agent_layers: list[np.ndarray] = field(default_factory=list)
    bot_layers: list[np.ndarray] = field(default_factory=list)
    restarts: int = 0

    def tau_exceeds(self, horizon: int) -> bool:
        return self.tau > horizon

    def tau_label(self, horizon: int) -> str:
        return f"> {horizon}" if self.tau > horizon else str(int(self.tau))


class _UniformStream:
    """Buffered uniforms so the pairing loop does not call the generator per stub."""

    def __init__(self, rng: np.random.Generator, chunk: int = 4096):
        self.rng = rng
        self.chunk = chunk
        self.buf = rng.random(chunk)
        self.pos = 0

    def index(self, k: int) -> int:
        if self.pos == self.chunk:
            self.buf = self.rng.random(self.chunk)
            self.pos = 0
        u = self.buf[self.pos]
        self.pos += 1
        return min(int(u * k), k - 1)


# outstub labels
_ABSENT, _OPEN, _PAIRED = 1, 2, 3


def build_dcm(seq: DegreeSequence, seed) -> tuple[MultiDigraph, ConstructionTrace, int]:
    """Pair agent instubs with uniformly chosen free outstubs, breadth-first from a random agent.

    A draw that lands on an already paired outstub is redrawn uniformly among
    the free ones, which has the same law as redrawing from all outstubs until
    a free one appears.
    """
    if not seq.strict:
        raise ParameterError("build_dcm needs a balanced sequence with positive degrees")
    rng = np.random.default_rng(seed)
    n = seq.n
    d_out = seq.d_out
    d_in_a = seq.d_in_a.tolist()
    d_in_b = seq.d_in_b.tolist()
    m = seq.m

    owner = np.repeat(np.arange(n), d_out).tolist()
    first_stub = (np.cumsum(d_out) - d_out).tolist()
    d_out_l = d_out.tolist()
    label = [_ABSENT] * m
    free = list(range(m))
    free_pos = list(range(m))

    def take(k: int) -> None:
        p = free_pos[k]
        last = free[-1]
        free[p] = last
        free_pos[last] = p
        free.pop()

    def open_owner(a: int) -> None:
        s = first_stub[a]
        for k in range(s, s + d_out_l[a]):
            label[k] = _OPEN

    stream = _UniformStream(rng)
    visited = [False] * n
    src: list[int] = []
    dst: list[int] = []
    bot_count = 0

    i_star = int(rng.integers(n))
    trace = ConstructionTrace(i_star=i_star)
    visited[i_star] = True
    open_owner(i_star)
    frontier = [i_star]
    primary = True
    level = 0

    while True:
        nxt: list[int] = []
        bots_here: list[int] = []
        for i in frontier:
            for _ in range(d_in_a[i]):
                k = stream.index(m)
                if label[k] != _ABSENT and primary and trace.tau == math.inf:
                    trace.tau = level
                if label[k] == _PAIRED:
                    k = free[stream.index(len(free))]
                a = owner[k]
                src.append(a)
                dst.append(i)
                if label[k] == _ABSENT:
                    visited[a] = True
                    open_owner(a)
                    nxt.append(a)
                label[k] = _PAIRED
                take(k)
            for _ in range(d_in_b[i]):
                b = n + bot_count
                bot_count += 1
                src.extend((b, b))
                dst.extend((b, i))
                bots_here.append(b)
        if primary:
            trace.agent_layers.append(np.array(frontier, dtype=np.int64))
            trace.bot_layers.append(np.array(bots_here, dtype=np.int64))
        if not free:
            break
        if nxt:
            frontier = nxt
            level += 1
            continue
        # the component is closed but stubs remain: restart at a fresh agent
        primary = False
        unvisited = [a for a in range(n) if not visited[a]]
        root = unvisited[stream.index(len(unvisited))]
        visited[root] = True
        open_owner(root)
        trace.restarts += 1
        frontier = [root]

    graph = MultiDigraph(n, bot_count, np.array(src, dtype=np.int64), np.array(dst, dtype=np.int64))
    return graph, trace, i_star


# ---------------------------------------------------------------------------
# edge-list ingestion


@dataclass(frozen=True)
class SnapGraph:
    graph: MultiDigraph
    sequence: DegreeSequence
    original_ids: np.ndarray  # original_ids[k] is the file id of compact node k
    n_file_edges: int
    n_self_loops_added: int


def load_snap(path) -> SnapGraph:
    """Read a whitespace separated "src dst" edge list; '#' lines are comments.

    Ids are compacted in order of first appearance. Agents nobody listens to
    get a self-loop so every agent has an in-neighbour.
    """
    path = Path(path)
    ids: dict[int, int] = {}
    src: list[int] = []
    dst: list[int] = []
    with path.open() as fh:
        for lineno, line in enumerate(fh, start=1):
            text = line.strip()
            if not text or text.startswith("#"):
                continue
            parts = text.split()
            if len(parts) != 2:
                raise SnapParseError(f"{path}:{lineno}: expected two ids, got {text!r}")
            try:
                u, v = int(parts[0]), int(parts[1])
            except ValueError:
                raise SnapParseError(f"{path}:{lineno}: non-integer id in {text!r}") from None
            src.append(ids.setdefault(u, len(ids)))
            dst.append(ids.setdefault(v, len(ids)))
    if not src:
        raise SnapParseError(f"{path}: no edges")
    n = len(ids)
    src_a = np.array(src, dtype=np.int64)
    dst_a = np.array(dst, dtype=np.int64)
    lonely = np.flatnonzero(np.bincount(dst_a, minlength=n) == 0)
    src_a = np.concatenate([src_a, lonely])
    dst_a = np.concatenate([dst_a, lonely])
    graph = MultiDigraph(n, 0, src_a, dst_a)
    return SnapGraph(
        graph=graph,
        sequence=graph.realized_sequence(),
        original_ids=np.array(list(ids), dtype=np.int64),
        n_file_edges=len(src),
        n_self_loops_added=int(lonely.size),
    )


# ---------------------------------------------------------------------------
# statistics


@dataclass(frozen=True)
class DegreeStats:
    p: float
    p_star: float
    q: float
    q_star: float
    r: float
    r_star: float
    nu1: float
    nu2: float
    nu3: float
    m: int
    n: int
    # plug-in ratio E[d_in_A] / (E[d_in_A] + E[d_in_B])
    p_mean_ratio: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def degree_stats(seq: DegreeSequence, alloc=None) -> DegreeStats:
    d_out = seq.d_out.astype(np.float64)
    j = seq.d_in_a.astype(np.float64)
    k = (seq.d_in_b if alloc is None else np.asarray(alloc)).astype(np.float64)
    if k.size != j.size:
        raise ParameterError("allocation length does not match the sequence")
    n = seq.n
    m = float(d_out.sum())
    total = j + k
    p_i = j / total
    q_i = p_i / total
    r_i = p_i * (j - 1) / total

    def biased(x):
        return min(1.0, float(x @ d_out) / m)

    def uniform(x):
        return min(1.0, float(x.mean()))

    return DegreeStats(
        p=biased(p_i),
        p_star=uniform(p_i),
        q=biased(q_i),
        q_star=uniform(q_i),
        r=biased(r_i),
        r_star=uniform(r_i),
        nu1=m / n,
        nu2=float((d_out**2).sum()) / n,
        nu3=float((d_out * j).sum()) / n,
        m=int(m),
        n=n,
        p_mean_ratio=float(j.sum() / total.sum()),
    )


def assumption_check(seq: DegreeSequence, horizon: int, zeta: float = 0.49) -> dict:
    """Moment diagnostics and the admissible horizon; advisory only."""
    st = degree_stats(seq)
    growth = st.nu3 / st.nu1
    degenerate = not growth > 1
    max_h = math.inf if degenerate else zeta * math.log(seq.n) / math.log(growth)
    return {
        "nu1": st.nu1,
        "nu2": st.nu2,
        "nu3": st.nu3,
        "growth": growth,
        "zeta": zeta,
        "max_horizon": max_h,
        "horizon": horizon,
        "horizon_ok": bool(horizon <= 1 or horizon <= max_h),
        "branching": not degenerate,
        "degenerate": degenerate,
    }
