"""Latin hypercube designs improved for maximin distance by coordinate swaps."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import ConfigError, SearchSpace


@dataclass
class LohDesign:
    space: SearchSpace
    points: np.ndarray  # (n, dim), raw coordinates
    maximin_history: list[float] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.points)

    def strata(self) -> np.ndarray:
        """Stratum index (0..n-1) of every coordinate."""
        u = self.space.normalize(self.points)
        return np.minimum(np.floor(u * self.n).astype(int), self.n - 1)

    def is_latin(self) -> bool:
        s = self.strata()
        return all(np.array_equal(np.sort(s[:, j]), np.arange(self.n)) for j in range(s.shape[1]))

    @property
    def maximin(self) -> float:
        return min_distance(self.space.normalize(self.points))


def _sq_dists(u: np.ndarray) -> np.ndarray:
    diff = u[:, None, :] - u[None, :, :]
    d = np.einsum("ijk,ijk->ij", diff, diff)
    np.fill_diagonal(d, np.inf)
    return d


def min_distance(u: np.ndarray) -> float:
    """Smallest pairwise Euclidean distance between rows of ``u``."""
    if len(u) < 2:
        return float("inf")
    return float(np.sqrt(_sq_dists(u).min()))


def latin_hypercube(n: int, dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random Latin design in the unit cube, one jittered point per stratum and dimension."""
    perms = np.column_stack([rng.permutation(n) for _ in range(dim)])
    return (perms + rng.random((n, dim))) / n


def loh_sample(space: SearchSpace, n: int, optimizer_iters: int,
               rng: np.random.Generator) -> LohDesign:
    """Latin design whose maximin distance is improved by random in-column swaps.

    A swap exchanges the coordinates of two points in one dimension, which
    keeps every stratum occupied exactly once. Swaps that lower the minimum
    pairwise distance are undone.
    """
    if n < 2:
        raise ConfigError("a Latin design needs n >= 2")
    if optimizer_iters < 0:
        raise ConfigError("optimizer_iters must be non-negative")
    u = latin_hypercube(n, space.dim, rng)
    d2 = _sq_dists(u)
    best = d2.min()
    history = [float(np.sqrt(best))]
    for _ in range(optimizer_iters):
        i, j = rng.choice(n, size=2, replace=False)
        k = rng.integers(space.dim)
        u[[i, j], k] = u[[j, i], k]
        rows = u[[i, j]]
        new = np.sum((rows[:, None, :] - u[None, :, :]) ** 2, axis=2)
        new[0, i] = new[1, j] = np.inf
        old_rows = d2[[i, j]].copy()
        d2[[i, j]] = new
        d2[:, [i, j]] = new.T
        cand = d2.min()
        if cand >= best:
            best = cand
        else:
            u[[i, j], k] = u[[j, i], k]
            d2[[i, j]] = old_rows
            d2[:, [i, j]] = old_rows.T
        history.append(float(np.sqrt(best)))
    return LohDesign(space, space.denormalize(u), history)
