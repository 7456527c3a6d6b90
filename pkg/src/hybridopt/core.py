"""Search space, objectives, scalarization and Pareto dominance.

Everything here is shared by the optimizers. Points are plain 1-D float
arrays; all optimizers work in raw parameter units and normalize locally
through :meth:`SearchSpace.normalize` when they need distances.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

QUANT_DIGITS = 6


class ConfigError(ValueError):
    """Invalid configuration or mismatched dimensions."""


class UsageError(ValueError):
    """An operation was called outside of its preconditions."""


class Sense(str, enum.Enum):
    MAXIMIZE = "maximize"
    MINIMIZE = "minimize"

    @property
    def sign(self) -> float:
        """+1 for maximize, -1 for minimize: ``sign * value`` is larger-is-better."""
        return 1.0 if self is Sense.MAXIMIZE else -1.0

    def better(self, a: float, b: float) -> bool:
        """True if ``a`` is strictly better than ``b``."""
        return a > b if self is Sense.MAXIMIZE else a < b

    def best_index(self, values: Sequence[float]) -> int:
        arr = np.asarray(values, dtype=float)
        return int(np.argmax(arr) if self is Sense.MAXIMIZE else np.argmin(arr))

    @property
    def worst_value(self) -> float:
        return -np.inf if self is Sense.MAXIMIZE else np.inf


def as_sense(value: Sense | str) -> Sense:
    try:
        return Sense(value)
    except ValueError:
        raise ConfigError(f"unknown optimization sense {value!r}") from None


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


def as_point(coords: Iterable[float]) -> np.ndarray:
    """Copy ``coords`` into a read-only float vector."""
    return _frozen(np.array(coords, dtype=float).reshape(-1))


@dataclass(frozen=True)
class SearchSpace:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.array(self.lower, dtype=float).reshape(-1)
        upper = np.array(self.upper, dtype=float).reshape(-1)
        if lower.size == 0:
            raise ConfigError("search space needs at least one dimension")
        if lower.shape != upper.shape:
            raise ConfigError("lower and upper bounds differ in length")
        if not np.all(np.isfinite(lower)) or not np.all(np.isfinite(upper)):
            raise ConfigError("bounds must be finite")
        if np.any(lower >= upper):
            raise ConfigError("every lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", _frozen(lower))
        object.__setattr__(self, "upper", _frozen(upper))

    @classmethod
    def cube(cls, dim: int, low: float = 0.0, high: float = 1.0) -> "SearchSpace":
        return cls(np.full(dim, low), np.full(dim, high))

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lower + self.upper)

    def contains(self, x: np.ndarray, atol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - atol) and np.all(x <= self.upper + atol))

    def contains_space(self, other: "SearchSpace") -> bool:
        return bool(np.all(other.lower >= self.lower) and np.all(other.upper <= self.upper))

    def normalize(self, x: np.ndarray) -> np.ndarray:
        """Map raw coordinates onto the unit cube (works on stacked rows too)."""
        return (np.asarray(x, dtype=float) - self.lower) / self.width

    def denormalize(self, u: np.ndarray) -> np.ndarray:
        return self.lower + np.asarray(u, dtype=float) * self.width

    def uniform(self, rng: np.random.Generator, n: int | None = None) -> np.ndarray:
        size = (self.dim,) if n is None else (n, self.dim)
        return self.lower + rng.random(size) * self.width

    def to_dict(self) -> dict:
        return {"lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "SearchSpace":
        return cls(np.array(d["lower"], dtype=float), np.array(d["upper"], dtype=float))


def clamp(space: SearchSpace, p: Sequence[float]) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (space.dim,):
        raise ConfigError(f"point has shape {p.shape}, space has dimension {space.dim}")
    return as_point(np.clip(p, space.lower, space.upper))


def quantize_key(space: SearchSpace, p: np.ndarray, digits: int = QUANT_DIGITS) -> bytes:
    """Hashable key of ``p`` rounded to ``digits`` decimals in unit-cube coordinates."""
    q = np.rint(space.normalize(p) * 10.0**digits).astype(np.int64)
    return q.tobytes()


@dataclass(frozen=True)
class ObjectiveReport:
    values: tuple[float, ...]
    trust_penalty: float = 0.0

    def __post_init__(self):
        values = tuple(float(v) for v in np.atleast_1d(self.values))
        if not all(np.isfinite(values)):
            raise ValueError(f"objective values must be finite, got {values}")
        if not (self.trust_penalty >= 0.0 and np.isfinite(self.trust_penalty)):
            raise ValueError(f"trust penalty must be finite and >= 0, got {self.trust_penalty}")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "trust_penalty", float(self.trust_penalty))

    @property
    def m(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Scalarizer:
    weights: tuple[float, ...]
    sense: Sense = Sense.MINIMIZE
    trust_weight: float = 0.0

    def __post_init__(self):
        weights = tuple(float(w) for w in np.atleast_1d(self.weights))
        if not weights or any(w < 0 for w in weights) or not any(w > 0 for w in weights):
            raise ConfigError(f"weights must be >= 0 with at least one positive, got {weights}")
        if self.trust_weight < 0:
            raise ConfigError("trust_weight must be >= 0")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "sense", as_sense(self.sense))
        object.__setattr__(self, "trust_weight", float(self.trust_weight))

    def __call__(self, report: ObjectiveReport) -> float:
        return scalarize(self, report)

    def with_weights(self, weights: Sequence[float]) -> "Scalarizer":
        return Scalarizer(tuple(weights), self.sense, self.trust_weight)

    def to_dict(self) -> dict:
        return {"weights": list(self.weights), "sense": self.sense.value,
                "trust_weight": self.trust_weight}

    @classmethod
    def from_dict(cls, d: dict) -> "Scalarizer":
        return cls(tuple(d["weights"]), Sense(d["sense"]), d.get("trust_weight", 0.0))


def scalarize(s: Scalarizer, r: ObjectiveReport) -> float:
    """Weighted sum of the objectives; the trust penalty always worsens the result."""
    if len(s.weights) != len(r.values):
        raise ConfigError(
            f"{len(s.weights)} weights given for {len(r.values)} objective values")
    total = float(np.dot(s.weights, r.values))
    penalty = s.trust_weight * r.trust_penalty
    return total - penalty if s.sense is Sense.MAXIMIZE else total + penalty


def dominates(a: ObjectiveReport | Sequence[float], b: ObjectiveReport | Sequence[float],
              sense: Sense | str = Sense.MINIMIZE) -> bool:
    """Pareto dominance of ``a`` over ``b``. Trust penalties are ignored."""
    va = a.values if isinstance(a, ObjectiveReport) else tuple(a)
    vb = b.values if isinstance(b, ObjectiveReport) else tuple(b)
    if len(va) != len(vb):
        raise ConfigError("cannot compare objective vectors of different lengths")
    sign = as_sense(sense).sign
    no_worse = all(sign * x >= sign * y for x, y in zip(va, vb))
    return no_worse and any(sign * x > sign * y for x, y in zip(va, vb))


def _dominance_matrix(values: np.ndarray, sense: Sense) -> np.ndarray:
    """``D[i, j]`` is True when row i dominates row j."""
    v = sense.sign * values
    ge = np.all(v[:, None, :] >= v[None, :, :], axis=2)
    gt = np.any(v[:, None, :] > v[None, :, :], axis=2)
    return ge & gt


def non_dominated_sort(pop: Sequence[ObjectiveReport | Sequence[float]],
                       sense: Sense | str = Sense.MINIMIZE) -> list[int]:
    """Front number (1-based) of every member of ``pop``."""
    if len(pop) == 0:
        raise UsageError("cannot sort an empty population")
    values = np.array([p.values if isinstance(p, ObjectiveReport) else tuple(p) for p in pop],
                      dtype=float)
    if values.ndim != 2:
        raise ConfigError("all population members need the same number of objectives")
    dom = _dominance_matrix(values, as_sense(sense))
    n = len(pop)
    ranks = np.zeros(n, dtype=int)
    dominated_by = dom.sum(axis=0)
    front = np.flatnonzero(dominated_by == 0)
    rank = 1
    while front.size:
        ranks[front] = rank
        dominated_by = dominated_by - dom[front].sum(axis=0)
        dominated_by[ranks > 0] = -1
        front = np.flatnonzero(dominated_by == 0)
        rank += 1
    return ranks.tolist()


@dataclass(frozen=True)
class EvaluationRecord:
    point: np.ndarray
    report: ObjectiveReport
    scalar: float
    eval_index: int
    block_index: int
    elapsed_seconds: float

    def to_dict(self) -> dict:
        return {
            "point": self.point.tolist(),
            "values": list(self.report.values),
            "trust_penalty": self.report.trust_penalty,
            "scalar": self.scalar,
            "eval_index": self.eval_index,
            "block_index": self.block_index,
            "elapsed_seconds": self.elapsed_seconds,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EvaluationRecord":
        return cls(as_point(d["point"]), ObjectiveReport(tuple(d["values"]), d["trust_penalty"]),
                   float(d["scalar"]), int(d["eval_index"]), int(d["block_index"]),
                   float(d["elapsed_seconds"]))


@dataclass
class ParetoArchive:
    """Mutually non-dominated evaluation records."""

    sense: Sense = Sense.MINIMIZE
    members: list[EvaluationRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def insert(self, e: EvaluationRecord) -> bool:
        """Add ``e`` in place unless an existing member dominates it."""
        if not self.members:
            self.members.append(e)
            return True
        values = np.array([m.report.values for m in self.members])
        v = self.sense.sign * values
        new = self.sense.sign * np.asarray(e.report.values)
        if v.shape[1] != new.size:
            raise ConfigError("record has a different number of objectives than the archive")
        dominated = np.any(np.all(v >= new, axis=1) & np.any(v > new, axis=1))
        if dominated:
            return False
        beaten = np.all(new >= v, axis=1) & np.any(new > v, axis=1)
        if beaten.any():
            self.members = [m for m, b in zip(self.members, beaten) if not b]
        self.members.append(e)
        return True

    def copy(self) -> "ParetoArchive":
        return ParetoArchive(self.sense, list(self.members))


def pareto_insert(archive: ParetoArchive, e: EvaluationRecord) -> ParetoArchive:
    """Functional form of :meth:`ParetoArchive.insert`; the input is left untouched."""
    out = archive.copy()
    out.insert(e)
    return out


def pareto_front(records: Iterable[EvaluationRecord], sense: Sense | str) -> ParetoArchive:
    archive = ParetoArchive(as_sense(sense))
    for r in records:
        archive.insert(r)
    return archive


@dataclass(frozen=True)
class Budget:
    max_evaluations: int | None = None
    max_seconds: float | None = None
    batch_size: int = 1

    def __post_init__(self):
        if self.max_evaluations is None and self.max_seconds is None:
            raise ConfigError("a budget needs max_evaluations or max_seconds")
        if self.max_evaluations is not None and int(self.max_evaluations) < 1:
            raise ConfigError("max_evaluations must be a positive integer")
        if self.max_seconds is not None and not self.max_seconds > 0:
            raise ConfigError("max_seconds must be positive")
        if int(self.batch_size) < 1:
            raise ConfigError("batch_size must be a positive integer")
