"""Branching-tree approximation of the DCM neighbourhood: walk hitting probabilities,
expected beliefs, and the large-n limit."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .graph import DegreeSequence, DegreeStats, ParameterError
from .sampling import CdfSampler

DEFAULT_NODE_CAP = 10_000_000


class TreeTooLarge(RuntimeError):
    pass


# ---------------------------------------------------------------------------
# limit


class Regime(str, Enum):
    VANISHING = "vanishing"  # T (1 - p) -> 0
    FINITE = "finite"  # T (1 - p) -> c
    DIVERGING = "diverging"  # T (1 - p) -> infinity


@dataclass(frozen=True)
class LimitSpec:
    regime: Regime
    theta: float
    eta: float
    c: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "regime", Regime(self.regime))
        if self.regime is Regime.FINITE and not (self.c is not None and self.c > 0):
            raise ParameterError("finite regime needs c > 0")


def limit_belief(spec: LimitSpec) -> float:
    if not (0 <= spec.theta <= 1 and 0 < spec.eta < 1):
        raise ParameterError("need theta in [0, 1] and eta in (0, 1)")
    if spec.regime is Regime.VANISHING:
        return spec.theta
    if spec.regime is Regime.DIVERGING:
        return 0.0
    x = spec.c * spec.eta
    return spec.theta * -math.expm1(-x) / x


# ---------------------------------------------------------------------------
# trees


@dataclass(frozen=True)
class DegreeLaw:
    """Empirical degree triples with root (uniform) and offspring (out-degree biased) weights."""

    d_out: np.ndarray
    d_in_a: np.ndarray
    d_in_b: np.ndarray
    root_weights: np.ndarray
    child_weights: np.ndarray

    @classmethod
    def from_sequence(cls, seq: DegreeSequence, alloc=None) -> "DegreeLaw":
        d_in_b = seq.d_in_b if alloc is None else np.asarray(alloc, dtype=np.int64)
        return cls(
            d_out=seq.d_out,
            d_in_a=seq.d_in_a,
            d_in_b=d_in_b,
            root_weights=np.full(seq.n, 1.0 / seq.n),
            child_weights=seq.d_out / seq.d_out.sum(),
        )


@dataclass
class TreeLayer:
    tree: np.ndarray  # which tree of the forest each node belongs to
    parent: np.ndarray  # index into the previous layer (-1 for roots)
    d_out: np.ndarray
    d_in_a: np.ndarray
    d_in_b: np.ndarray
    weight: np.ndarray  # product of 1/d_in over strict ancestors

    @property
    def size(self) -> int:
        return int(self.tree.size)

    def child_offset(self) -> np.ndarray:
        """Position of each node's first agent child in the next layer."""
        return np.cumsum(self.d_in_a) - self.d_in_a


@dataclass
class TreeSample:
    """A forest of independent trees; generation l of every tree lives in layers[l].

    Agent children of a node are contiguous in the next layer, in parent order.
    Bot children are absorbing and only counted (d_in_b).
    """

    layers: list[TreeLayer]
    n_trees: int

    @property
    def depth(self) -> int:
        return len(self.layers) - 1

    def layer_sizes(self) -> np.ndarray:
        """(depth+1, n_trees) agent counts per generation."""
        return np.stack([np.bincount(L.tree, minlength=self.n_trees) for L in self.layers])

    def path_weight_sums(self) -> np.ndarray:
        """Y[l, k] = sum over generation-l agents of tree k of their path weights."""
        return np.stack(
            [np.bincount(L.tree, weights=L.weight, minlength=self.n_trees) for L in self.layers]
        )


def sample_forest(
    law: DegreeLaw, depth: int, n_trees: int, seed, node_cap: int = DEFAULT_NODE_CAP
) -> TreeSample:
    """``n_trees`` independent trees to generation ``depth``; ``node_cap`` bounds each tree."""
    rng = np.random.default_rng(seed)
    root_table = CdfSampler(law.root_weights)
    child_table = CdfSampler(law.child_weights)

    def layer(idx, tree, parent, weight):
        return TreeLayer(tree, parent, law.d_out[idx], law.d_in_a[idx], law.d_in_b[idx], weight)

    idx = root_table.sample(rng, n_trees)
    layers = [layer(idx, np.arange(n_trees), np.full(n_trees, -1), np.ones(n_trees))]
    per_tree = np.ones(n_trees, dtype=np.int64)
    for _ in range(depth):
        prev = layers[-1]
        size = int(prev.d_in_a.sum())
        per_tree += np.bincount(prev.tree, weights=prev.d_in_a, minlength=n_trees).astype(np.int64)
        if per_tree.max() > node_cap:
            raise TreeTooLarge(f"a tree exceeds {node_cap} nodes at generation {len(layers)}")
        parent = np.repeat(np.arange(prev.size), prev.d_in_a)
        share = prev.weight / (prev.d_in_a + prev.d_in_b)
        idx = child_table.sample(rng, size)
        layers.append(layer(idx, prev.tree[parent], parent, share[parent]))
    return TreeSample(layers, n_trees)


def sample_tree(law: DegreeLaw, depth: int, seed, node_cap: int = DEFAULT_NODE_CAP) -> TreeSample:
    return sample_forest(law, depth, 1, seed, node_cap)


def binomial_weights(eta: float, horizon: int) -> np.ndarray:
    """u[l] = sum_{t=l}^{T-1} C(t,l) eta^l (1-eta)^(t-l), via Pascal's recurrence on rows."""
    row = np.zeros(horizon)
    row[0] = 1.0
    acc = row.copy()
    for _ in range(1, horizon):
        row[1:] = (1.0 - eta) * row[1:] + eta * row[:-1]
        row[0] *= 1.0 - eta
        acc += row
    return acc


def conditional_mean_belief(tree: TreeSample, theta: float, eta: float, horizon: int) -> np.ndarray:
    """Expected root signal average given the tree, one value per tree of the forest.

    Needs generations 0..T-1; Y_l only uses degrees of generations below l.
    """
    if tree.depth < horizon - 1:
        raise ParameterError(f"tree depth {tree.depth} too shallow for horizon {horizon}")
    y = tree.path_weight_sums()[:horizon]
    return theta / horizon * (binomial_weights(eta, horizon) @ y)


# ---------------------------------------------------------------------------
# random walks on the forest


def walk_survival(tree: TreeSample, n_walks: int, seed) -> np.ndarray:
    """alive[w, l, k]: walk w on tree k is still on an agent after l steps.

    Walks start at the root and step to a uniform in-neighbour; stepping onto a
    bot absorbs. Walks on one tree are independent given the tree.
    """
    rng = np.random.default_rng(seed)
    k = tree.n_trees
    alive = np.zeros((n_walks, tree.depth + 1, k), dtype=bool)
    for w in range(n_walks):
        pos = np.arange(k)  # index into the current layer, -1 once absorbed
        alive[w, 0] = True
        for l in range(tree.depth):
            L = tree.layers[l]
            live = pos >= 0
            at = pos[live]
            pick = np.floor(rng.random(at.size) * (L.d_in_a[at] + L.d_in_b[at])).astype(np.int64)
            nxt = np.where(pick < L.d_in_a[at], L.child_offset()[at] + pick, -1)
            pos = pos.copy()
            pos[live] = nxt
            alive[w, l + 1] = pos >= 0
    return alive


# ---------------------------------------------------------------------------
# closed forms


def hit_prob_single(stats: DegreeStats, l: int) -> float:
    if l < 0:
        raise ParameterError("l must be non-negative")
    if l == 0:
        return 1.0
    return stats.p_star * stats.p ** (l - 1)


def _pair_diagonal(stats: DegreeStats, l: int) -> float:
    if l == 0:
        return 1.0
    if l == 1:
        return stats.r_star + stats.q_star
    p, q, r = stats.p, stats.q, stats.r
    total = stats.r_star * p ** (2 * (l - 1)) + stats.q_star * q ** (l - 1)
    for t in range(2, l + 1):
        total += stats.q_star * q ** (t - 2) * r * p ** (2 * (l - t))
    return total


def hit_prob_pair(stats: DegreeStats, l: int, l2: int) -> float:
    """Both of two independent walks survive: the first to depth l, the second to l2 >= l."""
    if not 0 <= l <= l2:
        raise ParameterError("need 0 <= l <= l2")
    if l == 0:
        return hit_prob_single(stats, l2)
    return _pair_diagonal(stats, l) * stats.p ** (l2 - l)


def y_moments(stats: DegreeStats, l: int, l2: int) -> tuple[float, float, float]:
    mean = hit_prob_single(stats, l)
    joint = hit_prob_pair(stats, l, l2)
    return mean, joint, joint - mean * hit_prob_single(stats, l2)


def closed_form_mean(stats: DegreeStats, theta: float, eta: float, horizon: int) -> float:
    if horizon < 1:
        raise ParameterError("horizon must be at least 1")
    p, ps = stats.p, stats.p_star
    ratio = ps / p
    leak = 1.0 - p
    if abs(leak) < 1e-12:
        first = float(horizon)
    else:
        first = -math.expm1(horizon * math.log1p(-eta * leak)) / (eta * leak)
    second = -math.expm1(horizon * math.log1p(-eta)) / eta
    return theta / horizon * (ratio * first + (1.0 - ratio) * second)
