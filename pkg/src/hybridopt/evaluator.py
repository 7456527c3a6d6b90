"""Black-box evaluation: problems, parallel blocks, accounting and dedupe cache."""
from __future__ import annotations

import datetime as _dt
import time
from concurrent.futures import Executor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .core import (
    Budget,
    ConfigError,
    EvaluationRecord,
    ObjectiveReport,
    ParetoArchive,
    Scalarizer,
    SearchSpace,
    Sense,
    UsageError,
    as_point,
    as_sense,
    quantize_key,
)
from .results import RunResult, TrajectoryPoint

# Relative slack on time budgets so that n blocks of cost T/n fit into T exactly.
_TIME_SLACK = 1e-9


@dataclass(frozen=True)
class Problem:
    """A black box ``Point -> ObjectiveReport`` with a noise and cost model.

    ``eval_fn`` returns the noise-free objective values. When ``noise_sigma``
    is positive every evaluation adds an independent Gaussian draw to each
    objective, and the trust penalty reports how far off the evaluation was:
    ``trust_model(point, noise)`` when given, otherwise
    ``trust_factor * mean(|noise|)``.
    """

    space: SearchSpace
    objective_count: int
    eval_fn: Callable[[np.ndarray], Sequence[float]]
    sense: Sense = Sense.MINIMIZE
    noise_sigma: float = 0.0
    trust_factor: float = 1.0
    trust_model: Callable[[np.ndarray, np.ndarray], float] | None = None
    cost_seconds: float = 1.0
    objective_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.objective_count < 1:
            raise ConfigError("objective_count must be >= 1")
        if self.noise_sigma < 0 or self.cost_seconds < 0 or self.trust_factor < 0:
            raise ConfigError("noise_sigma, trust_factor and cost_seconds must be >= 0")
        object.__setattr__(self, "sense", as_sense(self.sense))
        if not self.objective_names:
            names = tuple(f"f{i}" for i in range(self.objective_count))
            object.__setattr__(self, "objective_names", names)
        elif len(self.objective_names) != self.objective_count:
            raise ConfigError("objective_names must match objective_count")

    @property
    def dim(self) -> int:
        return self.space.dim

    def base_values(self, x: np.ndarray) -> np.ndarray:
        values = np.asarray(self.eval_fn(x), dtype=float).reshape(-1)
        if values.size != self.objective_count:
            raise RuntimeError(
                f"eval_fn returned {values.size} values, expected {self.objective_count}")
        return values

    def noisy_report(self, x: np.ndarray, base: np.ndarray, rng_seed: int,
                     eval_index: int) -> ObjectiveReport:
        if self.noise_sigma == 0.0:
            return ObjectiveReport(tuple(base), 0.0)
        rng = np.random.default_rng([rng_seed, eval_index])
        noise = self.noise_sigma * rng.standard_normal(self.objective_count)
        if self.trust_model is not None:
            trust = float(self.trust_model(x, noise))
        else:
            trust = self.trust_factor * float(np.mean(np.abs(noise)))
        return ObjectiveReport(tuple(base + noise), trust)

    def with_changes(self, **changes) -> "Problem":
        from dataclasses import replace
        return replace(self, **changes)


@dataclass
class EvalLedger:
    batch_size: int = 1
    cost_seconds: float = 1.0
    real_time: bool = False
    total_evaluations: int = 0
    total_blocks: int = 0
    started_at: str = field(
        default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))
    _t0: float = field(default_factory=time.perf_counter, repr=False)

    def elapsed(self) -> float:
        """Seconds since the start: wall clock, or the simulated block clock."""
        if self.real_time:
            return time.perf_counter() - self._t0
        return self.total_blocks * self.cost_seconds

    def to_dict(self) -> dict:
        return {"total_evaluations": self.total_evaluations, "total_blocks": self.total_blocks,
                "batch_size": self.batch_size, "started_at": self.started_at}


class DedupeCache:
    """First evaluation of every quantized point in a run."""

    def __init__(self, space: SearchSpace):
        self.space = space
        self._store: dict[bytes, EvaluationRecord] = {}

    def __len__(self) -> int:
        return len(self._store)

    def key(self, point: np.ndarray) -> bytes:
        return quantize_key(self.space, point)

    def get(self, point: np.ndarray) -> EvaluationRecord | None:
        return self._store.get(self.key(point))

    def __contains__(self, point) -> bool:
        return self.key(point) in self._store

    def has_key(self, key: bytes) -> bool:
        return key in self._store

    def add(self, record: EvaluationRecord) -> None:
        self._store.setdefault(self.key(record.point), record)


def _default_scalarizer(problem: Problem) -> Scalarizer:
    return Scalarizer((1.0,) * problem.objective_count, problem.sense, 1.0)


def evaluate_block(problem: Problem, points: Sequence[np.ndarray], ledger: EvalLedger,
                   cache: DedupeCache | None, rng_seed: int,
                   scalarizer: Scalarizer | None = None,
                   executor: Executor | None = None) -> list[EvaluationRecord]:
    """Evaluate ``points`` as one synchronized block.

    Cached points return their stored record and cost nothing. The block is
    charged to the ledger only if at least one point is actually evaluated.
    """
    if len(points) == 0:
        raise UsageError("evaluate_block needs at least one point")
    if len(points) > ledger.batch_size:
        raise UsageError(f"{len(points)} points exceed the batch size {ledger.batch_size}")
    scalarizer = scalarizer or _default_scalarizer(problem)
    pts = [as_point(p) for p in points]
    for p in pts:
        if p.shape != (problem.dim,) or not problem.space.contains(p):
            raise UsageError(f"point {p.tolist()} lies outside the search space")

    out: list[EvaluationRecord | None] = [None] * len(pts)
    todo: list[int] = []
    pending: dict[bytes, int] = {}
    alias: dict[int, int] = {}
    for i, p in enumerate(pts):
        if cache is not None:
            hit = cache.get(p)
            if hit is not None:
                out[i] = hit
                continue
            k = cache.key(p)
            if k in pending:
                alias[i] = pending[k]
                continue
            pending[k] = i
        todo.append(i)

    if todo:
        todo_pts = [pts[i] for i in todo]
        if executor is not None and len(todo_pts) > 1:
            bases = list(executor.map(problem.base_values, todo_pts))
        else:
            bases = [problem.base_values(p) for p in todo_pts]
        ledger.total_blocks += 1
        block = ledger.total_blocks
        elapsed = ledger.elapsed()
        for i, base in zip(todo, bases):
            ledger.total_evaluations += 1
            idx = ledger.total_evaluations
            report = problem.noisy_report(pts[i], base, rng_seed, idx)
            rec = EvaluationRecord(pts[i], report, scalarizer(report), idx, block, elapsed)
            out[i] = rec
            if cache is not None:
                cache.add(rec)
    for i, j in alias.items():
        out[i] = out[j]
    return out  # type: ignore[return-value]


def evaluate_one(problem: Problem, point: np.ndarray, ledger: EvalLedger,
                 cache: DedupeCache | None, rng_seed: int,
                 scalarizer: Scalarizer | None = None) -> EvaluationRecord:
    return evaluate_block(problem, [point], ledger, cache, rng_seed, scalarizer)[0]


class Session:
    """Budgeted evaluation state for one optimizer run.

    Owns the ledger, dedupe cache, best-so-far trajectory and the Pareto
    archive of every fresh evaluation. Optimizers submit blocks through
    :meth:`evaluate` and stop once :attr:`exhausted` is set.
    """

    def __init__(self, problem: Problem, scalarizer: Scalarizer, budget: Budget, seed: int = 0,
                 *, use_cache: bool = True, real_time: bool = False,
                 executor: Executor | None = None):
        if len(scalarizer.weights) != problem.objective_count:
            raise ConfigError(
                f"scalarizer has {len(scalarizer.weights)} weights, problem has "
                f"{problem.objective_count} objectives")
        self.problem = problem
        self.scalarizer = scalarizer
        self.sense = scalarizer.sense
        self.budget = budget
        self.seed = int(seed)
        self.executor = executor
        self.ledger = EvalLedger(batch_size=int(budget.batch_size),
                                 cost_seconds=problem.cost_seconds, real_time=real_time)
        self.cache = DedupeCache(problem.space) if use_cache else None
        self.records: list[EvaluationRecord] = []
        self.trajectory: list[TrajectoryPoint] = []
        self.archive = ParetoArchive(problem.sense)
        self.best: EvaluationRecord | None = None

    @property
    def space(self) -> SearchSpace:
        return self.problem.space

    @property
    def batch_size(self) -> int:
        return self.ledger.batch_size

    def remaining_evaluations(self) -> int | None:
        if self.budget.max_evaluations is None:
            return None
        return max(0, self.budget.max_evaluations - self.ledger.total_evaluations)

    @property
    def exhausted(self) -> bool:
        rem = self.remaining_evaluations()
        if rem is not None and rem <= 0:
            return True
        t = self.budget.max_seconds
        return t is not None and self.ledger.elapsed() >= t * (1.0 - _TIME_SLACK)

    def better(self, a: float, b: float) -> bool:
        return self.sense.better(a, b)

    def known(self, point: np.ndarray) -> EvaluationRecord | None:
        return None if self.cache is None else self.cache.get(point)

    def key(self, point: np.ndarray) -> bytes:
        return quantize_key(self.space, point)

    def evaluate(self, points: Sequence[np.ndarray]) -> list[EvaluationRecord]:
        """Evaluate at most one block; returns records for the admitted prefix of ``points``.

        The prefix is shorter than ``points`` only when the evaluation budget
        runs out. Nothing is evaluated once the budget is exhausted.
        """
        if not points:
            return []
        if len(points) > self.batch_size:
            raise UsageError(f"{len(points)} points exceed the batch size {self.batch_size}")
        if self.exhausted:
            return []
        rem = self.remaining_evaluations()
        if rem is not None:
            seen: set[bytes] = set()
            fresh = 0
            cut = len(points)
            for i, p in enumerate(points):
                k = self.key(p)
                if self.cache is not None and (k in seen or self.known(p) is not None):
                    continue
                seen.add(k)
                fresh += 1
                if fresh > rem:
                    cut = i
                    break
            points = points[:cut]
            if not points:
                return []
        before = self.ledger.total_evaluations
        recs = evaluate_block(self.problem, points, self.ledger, self.cache, self.seed,
                              self.scalarizer, self.executor)
        for r in recs:
            if r.eval_index > before and (not self.records or r.eval_index > self.records[-1].eval_index):
                self._register(r)
        return recs

    def evaluate_many(self, points: Sequence[np.ndarray]) -> list[EvaluationRecord]:
        """Evaluate ``points`` in consecutive full blocks until done or out of budget."""
        out: list[EvaluationRecord] = []
        for start in range(0, len(points), self.batch_size):
            chunk = list(points[start:start + self.batch_size])
            recs = self.evaluate(chunk)
            out.extend(recs)
            if len(recs) < len(chunk):
                break
        return out

    def _register(self, r: EvaluationRecord) -> None:
        self.records.append(r)
        self.archive.insert(r)
        if self.best is None or self.sense.better(r.scalar, self.best.scalar):
            self.best = r
        self.trajectory.append(TrajectoryPoint(r.elapsed_seconds, r.eval_index, self.best.scalar))

    def result(self, algorithm: str, benchmark: str = "", termination: str = "budget exhausted",
               config: dict | None = None, extra: dict | None = None) -> RunResult:
        if self.best is None:
            raise RuntimeError("no evaluation was performed")
        return RunResult(
            algorithm=algorithm,
            benchmark=benchmark,
            seed=self.seed,
            trajectory=list(self.trajectory),
            final_best=self.best,
            ledger=self.ledger.to_dict(),
            pareto=list(self.archive.members),
            records=list(self.records),
            termination_reason=termination,
            scalarizer=self.scalarizer,
            space=self.space,
            objective_names=self.problem.objective_names,
            problem_sense=self.problem.sense,
            elapsed_seconds=self.ledger.elapsed(),
            config=dict(config or {}),
            extra=dict(extra or {}),
        )
