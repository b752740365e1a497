"""Walker/Vose alias table for repeated draws from a fixed discrete law."""

from __future__ import annotations

import numpy as np


class AliasTable:
    """O(n) construction, O(1) per draw.

    Weights need not be normalized; they must be finite, non-negative and
    not all zero.
    """

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("weights must be a non-empty 1-d array")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and non-negative")
        total = w.sum()
        if total <= 0:
            raise ValueError("weights sum to zero")

        n = w.size
        scaled = w * (n / total)
        prob = np.ones(n)
        alias = np.arange(n)
        small = [i for i in range(n) if scaled[i] < 1.0]
        large = [i for i in range(n) if scaled[i] >= 1.0]
        while small and large:
            s = small.pop()
            g = large[-1]
            prob[s] = scaled[s]
            alias[s] = g
            scaled[g] -= 1.0 - scaled[s]
            if scaled[g] < 1.0:
                large.pop()
                small.append(g)
        # leftovers are 1 up to round-off; zero-weight entries must never be
        # drawn, so they keep whatever alias was assigned above
        heaviest = int(np.argmax(w))
        for i in large + small:
            if w[i] > 0:
                prob[i] = 1.0
            else:
                prob[i] = 0.0
                alias[i] = heaviest
        self.prob = prob
        self.alias = alias
        self.n = n

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        col = rng.integers(0, self.n, size=size)
        keep = rng.random(size) < self.prob[col]
        return np.where(keep, col, self.alias[col])


class CdfSampler:
    """Inverse-CDF draws: vectorized O(n) setup, O(log n) per draw.

    Preferred over the alias table when the law is rebuilt often and n is
    large, since the alias construction loop runs in the interpreter.
    """

    def __init__(self, weights):
        w = np.asarray(weights, dtype=np.float64)
        if w.ndim != 1 or w.size == 0 or np.any(w < 0) or not w.sum() > 0:
            raise ValueError("weights must be a non-empty, non-negative, non-zero vector")
        cdf = np.cumsum(w)
        self.cdf = cdf / cdf[-1]
        self.n = w.size

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        idx = np.searchsorted(self.cdf, rng.random(size), side="right")
        return np.minimum(idx, self.n - 1)
