"""Accelerators for the path-following optimizers (IRW, AsBeC).

* trend prediction: extrapolate from the history of accepted bests
* probabilistic parameter modification: perturb a random subset of coordinates
* range resize: shrink the working box around the incumbent on stagnation

The weighting used by :func:`trend_predict` is one concrete reading of
"weights depend on improvement quality and proximity to the incumbent".
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .core import QUANT_DIGITS, ConfigError, SearchSpace, Sense, clamp


@dataclass
class AcceleratorConfig:
    history_capacity: int = 5
    injection_period: int = 5
    modification_probability: float | None = None  # None -> max(0.5, 1/dim)
    stagnation_window: int = 20
    resize_factor: float = 0.7

    def __post_init__(self):
        if self.history_capacity < 2:
            raise ConfigError("history_capacity must be >= 2")
        if self.injection_period < 1:
            raise ConfigError("injection_period must be >= 1")
        if self.stagnation_window < 1:
            raise ConfigError("stagnation_window must be >= 1")
        if not 0.0 < self.resize_factor <= 1.0:
            raise ConfigError("resize_factor must lie in (0, 1]")
        p = self.modification_probability
        if p is not None and not 0.0 <= p <= 1.0:
            raise ConfigError("modification_probability must lie in [0, 1]")

    def p_mod(self, dim: int) -> float:
        if self.modification_probability is not None:
            return self.modification_probability
        return max(0.5, 1.0 / dim)


@dataclass
class TrendHistory:
    """Successive accepted bests, strictly improving, oldest first."""

    space: SearchSpace
    sense: Sense
    capacity: int = 5
    entries: deque = field(default_factory=deque)

    def push(self, point: np.ndarray, scalar: float) -> bool:
        if self.entries and not self.sense.better(scalar, self.entries[-1][1]):
            return False
        self.entries.append((np.asarray(point, dtype=float), float(scalar)))
        while len(self.entries) > self.capacity:
            self.entries.popleft()
        return True

    def __len__(self) -> int:
        return len(self.entries)


def trend_weights(h: TrendHistory) -> np.ndarray:
    pts = [e[0] for e in h.entries]
    vals = np.array([e[1] for e in h.entries])
    gains = np.abs(np.diff(vals))
    quality = gains / gains.max() if gains.max() > 0 else np.ones_like(gains)
    latest = h.space.normalize(pts[-1])
    dist = np.array([np.linalg.norm(latest - h.space.normalize(p)) for p in pts[1:]])
    return quality / (1.0 + dist)


def trend_predict(h: TrendHistory) -> np.ndarray | None:
    """Incumbent plus a weighted mean of recent improvement steps, or None with < 2 entries."""
    if len(h) < 2:
        return None
    pts = np.array([e[0] for e in h.entries])
    steps = np.diff(pts, axis=0)
    w = trend_weights(h)
    if w.sum() <= 0:
        return None
    return clamp(h.space, pts[-1] + (w[:, None] * steps).sum(axis=0) / w.sum())


def modification_mask(dim: int, p_mod: float, rng: np.random.Generator) -> np.ndarray:
    """Coordinates chosen independently with probability ``p_mod``; never empty."""
    mask = rng.random(dim) < p_mod
    while not mask.any():
        if p_mod <= 0.0:
            mask[rng.integers(dim)] = True
            break
        mask = rng.random(dim) < p_mod
    return mask


def maybe_modify(x: np.ndarray, p_mod: float, rng: np.random.Generator,
                 scale: np.ndarray | float = 1.0) -> np.ndarray:
    """Gaussian-perturb a random subset of ``x``; the rest is copied exactly."""
    x = np.asarray(x, dtype=float)
    mask = modification_mask(x.size, p_mod, rng)
    out = x.copy()
    noise = rng.standard_normal(x.size) * np.broadcast_to(scale, x.shape)
    out[mask] += noise[mask]
    return out


class ResizeFloor(Exception):
    """The resized box would be narrower than the quantization resolution."""


def range_resize(space: SearchSpace, best: np.ndarray, rho: float,
                 original: SearchSpace | None = None) -> SearchSpace:
    """Box of ``rho`` times the width of ``space``, centred on ``best``, inside ``original``."""
    if not 0.0 < rho <= 1.0:
        raise ConfigError("resize factor must lie in (0, 1]")
    outer = original or space
    best = np.asarray(best, dtype=float)
    if not outer.contains(best):
        raise ConfigError("best point lies outside the search space")
    if rho == 1.0:
        return space
    width = rho * space.width
    if np.any(width / outer.width < 10.0 ** -QUANT_DIGITS):
        raise ResizeFloor("range resize reached the quantization floor")
    lower = best - 0.5 * width
    upper = best + 0.5 * width
    shift_up = np.maximum(outer.lower - lower, 0.0)
    shift_down = np.maximum(upper - outer.upper, 0.0)
    lower = np.maximum(lower + shift_up - shift_down, outer.lower)
    upper = np.minimum(upper + shift_up - shift_down, outer.upper)
    return SearchSpace(lower, upper)


class Accelerator:
    """Per-run accelerator state shared by IRW and AsBeC.

    Tracks accepted improvements for trend prediction and counts
    evaluations since the last improvement to trigger range resizing.
    The working ``scale`` (relative step size multiplier) shrinks by
    ``resize_factor`` at every resize.
    """

    def __init__(self, cfg: AcceleratorConfig, space: SearchSpace, sense: Sense):
        self.cfg = cfg
        self.space = space
        self.working = space
        self.history = TrendHistory(space, sense, cfg.history_capacity)
        self.improvements = 0
        self.since_improvement = 0
        self.resizes = 0
        self.floor_reached = False
        self._trend_pending = False

    @property
    def scale(self) -> float:
        return float(np.min(self.working.width / self.space.width))

    def record_improvement(self, point: np.ndarray, scalar: float) -> None:
        if self.history.push(point, scalar):
            self.improvements += 1
            if self.improvements % self.cfg.injection_period == 0:
                self._trend_pending = True
        self.since_improvement = 0

    def record_failures(self, n: int = 1) -> None:
        self.since_improvement += n

    def take_trend(self) -> np.ndarray | None:
        """Trend candidate once every ``injection_period`` improvements, else None."""
        if not self._trend_pending:
            return None
        self._trend_pending = False
        return trend_predict(self.history)

    def maybe_resize(self, best: np.ndarray) -> bool:
        if self.since_improvement < self.cfg.stagnation_window or self.floor_reached:
            return False
        try:
            self.working = range_resize(self.working, best, self.cfg.resize_factor, self.space)
        except ResizeFloor:
            self.floor_reached = True
            return False
        self.resizes += 1
        self.since_improvement = 0
        return True
