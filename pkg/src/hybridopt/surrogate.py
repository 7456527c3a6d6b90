"""LOH + ANN surrogate loop.

Per cycle: sample an optimized Latin design in the current box and evaluate
it, train a network on every true evaluation inside the box, search the
network with GeDEA, truly evaluate the best predicted point plus a spread
of predicted-Pareto points, then shrink the box around the best true point.
After ``cycles`` refinements (or a collapsed box) the next round starts
again from the full bounds, until the budget is spent.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .accelerators import ResizeFloor, range_resize
from .ann import AnnConfig, AnnModel, train_ann
from .core import Budget, ConfigError, Scalarizer, SearchSpace
from .evaluator import Problem, Session
from .gedea import GedeaConfig, run_gedea
from .lhs import loh_sample
from .results import RunResult

HIGH_DIM_WARNING = 10


@dataclass
class SurrogateConfig:
    samples_per_cycle: int | None = None  # None -> 10*dim rounded up to whole blocks
    cycles: int = 3
    shrink_factor: float = 0.5
    predicted_pareto_evals: int | None = None  # None -> batch size
    loh_iters: int = 500
    ann: AnnConfig = field(default_factory=AnnConfig)
    search_population: int = 16
    search_generations: int = 30

    def __post_init__(self):
        if self.samples_per_cycle is not None and self.samples_per_cycle < 2:
            raise ConfigError("samples_per_cycle must be >= 2")
        if self.cycles < 1:
            raise ConfigError("cycles must be positive")
        if not 0.0 < self.shrink_factor < 1.0:
            raise ConfigError("shrink_factor must lie in (0, 1)")
        if self.predicted_pareto_evals is not None and self.predicted_pareto_evals < 1:
            raise ConfigError("predicted_pareto_evals must be positive")
        if self.search_population < 4 or self.search_population % 2:
            raise ConfigError("search_population must be an even integer >= 4")

    def resolved(self, batch_size: int, dim: int) -> tuple[int, int]:
        n = self.samples_per_cycle or -(-10 * dim // batch_size) * batch_size
        k = self.predicted_pareto_evals or batch_size
        if n < 2 * dim:
            raise ConfigError(f"samples_per_cycle must be >= 2*dim = {2 * dim}")
        if k > n:
            raise ConfigError("predicted_pareto_evals must not exceed samples_per_cycle")
        return n, k


def surrogate_problem(model: AnnModel, problem: Problem, space: SearchSpace) -> Problem:
    """Noise-free, zero-cost problem backed by ``model`` over ``space``."""
    return Problem(space, problem.objective_count, model, problem.sense, noise_sigma=0.0,
                   trust_factor=0.0, cost_seconds=0.0, objective_names=problem.objective_names)


def pick_spread(points: np.ndarray, scalars: np.ndarray, k: int, space: SearchSpace,
                sense) -> list[int]:
    """Best predicted scalar first, then greedy maximin in unit-cube distance."""
    if len(points) == 0:
        return []
    chosen = [sense.best_index(scalars)]
    u = space.normalize(np.asarray(points, dtype=float))
    d = np.linalg.norm(u - u[chosen[0]], axis=1)
    while len(chosen) < min(k, len(points)):
        d[chosen] = -np.inf
        i = int(np.argmax(d))
        if d[i] <= 0.0:
            break
        chosen.append(i)
        d = np.minimum(d, np.linalg.norm(u - u[i], axis=1))
    return chosen


def run_loh_ann(problem: Problem, cfg: SurrogateConfig | None, scalarizer: Scalarizer,
                budget: Budget, rng_seed: int = 0, *, benchmark: str = "",
                session: Session | None = None) -> RunResult:
    cfg = cfg or SurrogateConfig()
    ses = session or Session(problem, scalarizer, budget, rng_seed)
    n, k = cfg.resolved(ses.batch_size, problem.dim)
    if problem.dim > HIGH_DIM_WARNING:
        warnings.warn(f"surrogate search in {problem.dim} dimensions is likely to be poor",
                      stacklevel=2)
    rng = np.random.default_rng([rng_seed, 5])
    original = problem.space
    box = original
    cycle_in_round = 0
    cycles = rounds = collapses = 0
    subspaces: list[dict] = []
    termination = "budget exhausted"
    val_rmse: list[float] = []

    while not ses.exhausted:
        first = ses.ledger.total_evaluations + 1
        subspaces.append({**box.to_dict(), "first_eval": first, "last_eval": first - 1})
        design = loh_sample(box, n, cfg.loh_iters, rng)
        ses.evaluate_many(list(design.points))
        subspaces[-1]["last_eval"] = ses.ledger.total_evaluations
        if ses.exhausted:
            break
        inside = [r for r in ses.records if box.contains(r.point)]
        X = np.array([r.point for r in inside])
        Y = np.array([r.report.values for r in inside])
        model = train_ann(X, Y, cfg.ann, rng, in_lower=box.lower, in_upper=box.upper)
        val_rmse.append(model.validation_rmse)

        search = run_gedea(
            surrogate_problem(model, problem, box),
            GedeaConfig(population_size=cfg.search_population,
                        generations=cfg.search_generations),
            scalarizer,
            Budget(cfg.search_population * (cfg.search_generations + 1), None,
                   cfg.search_population),
            int(rng.integers(2**31)))
        # Candidates: the predicted front plus the best-scoring predictions.
        pool = {ses.key(r.point): r for r in search.pareto}
        for r in sorted(search.records, key=lambda r: -scalarizer.sense.sign * r.scalar)[:4 * k]:
            pool.setdefault(ses.key(r.point), r)
        cands = [r for key, r in pool.items() if ses.known(r.point) is None]
        if cands:
            pts = np.array([r.point for r in cands])
            picks = pick_spread(pts, np.array([r.scalar for r in cands]), k, box,
                                scalarizer.sense)
            ses.evaluate_many([pts[i] for i in picks])
            subspaces[-1]["last_eval"] = ses.ledger.total_evaluations
        cycles += 1
        cycle_in_round += 1
        if ses.exhausted:
            break

        if cycle_in_round >= cfg.cycles:
            box, cycle_in_round = original, 0
            rounds += 1
            continue
        try:
            box = range_resize(box, ses.best.point, cfg.shrink_factor, original)
        except ResizeFloor:
            collapses += 1
            box, cycle_in_round = original, 0
            rounds += 1

    cfg_dict = {"samples_per_cycle": n, "predicted_pareto_evals": k, "cycles": cfg.cycles,
                "shrink_factor": cfg.shrink_factor, "loh_iters": cfg.loh_iters,
                "hidden_width": cfg.ann.width_for(problem.dim), "epochs": cfg.ann.epochs}
    extra = {"cycles_run": cycles, "rounds_completed": rounds, "collapses": collapses,
             "subspaces": subspaces, "validation_rmse": val_rmse}
    return ses.result("loh_ann", benchmark, termination, cfg_dict, extra)
