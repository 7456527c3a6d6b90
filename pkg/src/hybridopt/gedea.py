"""Diversity-preserving multi-objective genetic algorithm (GeDEA).

Each generation: binary tournament mating pool, blend crossover, Gaussian
mutation, clone replacement, one block-parallel evaluation of the offspring
cohort, then survival by non-dominated sorting with the genetic diversity
as an extra maximized objective. The individual with the best weighted sum
always survives.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (Budget, ConfigError, EvaluationRecord, Scalarizer, SearchSpace, Sense, clamp,
                   non_dominated_sort, quantize_key)
from .evaluator import Problem, Session
from .results import RunResult


@dataclass
class GedeaConfig:
    population_size: int | None = None  # None -> batch size, rounded up to an even number >= 4
    generations: int | None = None  # None -> until the budget runs out
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None -> 1/dim
    mutation_sigma: float = 0.1
    blend_alpha: float = 0.5

    def __post_init__(self):
        n = self.population_size
        if n is not None and (n < 4 or n % 2):
            raise ConfigError("population_size must be an even integer >= 4")
        if self.generations is not None and self.generations < 1:
            raise ConfigError("generations must be positive")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ConfigError("crossover_rate must lie in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ConfigError("mutation_rate must lie in [0, 1]")
        if not self.mutation_sigma > 0:
            raise ConfigError("mutation_sigma must be positive")
        if self.blend_alpha < 0:
            raise ConfigError("blend_alpha must be non-negative")

    def resolved(self, batch_size: int, dim: int) -> "GedeaConfig":
        n = self.population_size or max(4, batch_size + batch_size % 2)
        rate = 1.0 / dim if self.mutation_rate is None else self.mutation_rate
        return GedeaConfig(n, self.generations, self.crossover_rate, rate, self.mutation_sigma,
                           self.blend_alpha)


@dataclass
class Individual:
    genome: np.ndarray
    record: EvaluationRecord | None = None
    rank: int = 0
    diversity: float = 0.0

    @property
    def scalar(self) -> float:
        return self.record.scalar


def init_population(space: SearchSpace, n: int, rng: np.random.Generator,
                    seeds: list[np.ndarray] | None = None) -> list[Individual]:
    """``n`` clone-free uniform genomes; ``seeds`` (if any) come first."""
    if n < 4:
        raise ConfigError("population needs at least 4 individuals")
    pop, keys = [], set()
    for g in list(seeds or []):
        g = clamp(space, g)
        k = quantize_key(space, g)
        if k not in keys and len(pop) < n:
            keys.add(k)
            pop.append(Individual(g))
    while len(pop) < n:
        g = clamp(space, space.uniform(rng))
        k = quantize_key(space, g)
        if k not in keys:
            keys.add(k)
            pop.append(Individual(g))
    return pop


def blend(p1: np.ndarray, p2: np.ndarray, alpha: float, rng: np.random.Generator) -> np.ndarray:
    """BLX-alpha: each gene uniform on the parents' interval widened by ``alpha`` times its span."""
    lo, hi = np.minimum(p1, p2), np.maximum(p1, p2)
    span = hi - lo
    return rng.uniform(lo - alpha * span, hi + alpha * span)


def make_offspring(parents: list[Individual], cfg: GedeaConfig, space: SearchSpace,
                   rng: np.random.Generator) -> list[Individual]:
    """Pairwise blend crossover then per-gene Gaussian mutation, clamped to bounds."""
    rate = 1.0 / space.dim if cfg.mutation_rate is None else cfg.mutation_rate
    children = []
    for i in range(0, len(parents) - 1, 2):
        a, b = parents[i].genome, parents[i + 1].genome
        if rng.random() < cfg.crossover_rate:
            kids = [blend(a, b, cfg.blend_alpha, rng), blend(a, b, cfg.blend_alpha, rng)]
        else:
            kids = [np.array(a, dtype=float), np.array(b, dtype=float)]
        children.extend(kids)
    if len(parents) % 2:
        children.append(np.array(parents[-1].genome, dtype=float))
    out = []
    for c in children:
        mask = rng.random(space.dim) < rate
        noise = rng.standard_normal(space.dim) * cfg.mutation_sigma * space.width
        c = np.where(mask, c + noise, c)
        out.append(Individual(clamp(space, c)))
    return out


def replace_clones(pop: list[Individual], space: SearchSpace, rng: np.random.Generator,
                   taken=None) -> list[Individual]:
    """Keep the first of every quantized-equal group; the rest become fresh random genomes.

    ``taken`` optionally reports keys already used elsewhere (other
    population members, the evaluation cache); genomes hitting it are
    replaced as well.
    """
    keys: set[bytes] = set()

    def used(k):
        return k in keys or (taken is not None and taken(k))

    out = []
    for ind in pop:
        k = quantize_key(space, ind.genome)
        if used(k):
            g = clamp(space, space.uniform(rng))
            k = quantize_key(space, g)
            while used(k):
                g = clamp(space, space.uniform(rng))
                k = quantize_key(space, g)
            ind = Individual(g)
        keys.add(k)
        out.append(ind)
    return out


def diversity(genomes: np.ndarray, space: SearchSpace) -> np.ndarray:
    """Distance from each genome to its nearest neighbour in unit-cube coordinates."""
    u = space.normalize(np.asarray(genomes, dtype=float))
    if len(u) < 2:
        return np.zeros(len(u))
    d = np.linalg.norm(u[:, None, :] - u[None, :, :], axis=2)
    np.fill_diagonal(d, np.inf)
    return d.min(axis=1)


def rank_and_select(pop: list[Individual], n: int, scalarizer: Scalarizer,
                    sense: Sense, space: SearchSpace) -> list[Individual]:
    """Next generation of ``n`` individuals from evaluated ``pop``.

    Sorting objectives are the report values (in ``sense``) plus the
    diversity, maximized. Ranks fill in order; the last partial rank keeps
    its most diverse members. The best weighted sum is always kept, evicting
    the least diverse member of the last admitted rank if needed.
    """
    div = diversity([p.genome for p in pop], space)
    vecs = [tuple(sense.sign * np.asarray(p.record.report.values)) + (d,)
            for p, d in zip(pop, div)]
    ranks = non_dominated_sort(vecs, Sense.MAXIMIZE)
    for p, r, d in zip(pop, ranks, div):
        p.rank, p.diversity = int(r), float(d)
    if len(pop) <= n:
        return list(pop)
    chosen: list[int] = []
    last_rank: list[int] = []
    for r in sorted(set(ranks)):
        members = [i for i in range(len(pop)) if ranks[i] == r]
        room = n - len(chosen)
        if room <= 0:
            break
        if len(members) > room:
            members = sorted(members, key=lambda i: -div[i])[:room]
        chosen.extend(members)
        last_rank = members
    elite = scalarizer.sense.best_index([p.scalar for p in pop])
    if elite not in chosen:
        evict = min(last_rank, key=lambda i: (div[i], -i))
        chosen[chosen.index(evict)] = elite
    return [pop[i] for i in chosen]


def tournament(pop: list[Individual], n: int, rng: np.random.Generator) -> list[Individual]:
    """Binary tournaments on (lower rank, then higher diversity)."""
    pool = []
    for _ in range(n):
        i, j = rng.integers(len(pop), size=2)
        a, b = pop[i], pop[j]
        pool.append(b if (b.rank, -b.diversity) < (a.rank, -a.diversity) else a)
    return pool


def run_gedea(problem: Problem, cfg: GedeaConfig | None, scalarizer: Scalarizer, budget: Budget,
              rng_seed: int = 0, *, start: np.ndarray | None = None, benchmark: str = "",
              session: Session | None = None, on_generation=None) -> RunResult:
    """GeDEA run; ``on_generation(index, population)`` sees every survivor set."""
    ses = session or Session(problem, scalarizer, budget, rng_seed)
    space = problem.space
    cfg = (cfg or GedeaConfig()).resolved(ses.batch_size, problem.dim)
    rng = np.random.default_rng([rng_seed, 4])
    n = cfg.population_size

    def evaluate(inds):
        recs = ses.evaluate_many([ind.genome for ind in inds])
        for ind, r in zip(inds, recs):
            ind.record = r
        return [ind for ind in inds if ind.record is not None]

    pop = evaluate(init_population(space, n, rng, [start] if start is not None else None))
    if not pop:
        raise RuntimeError("budget too small to evaluate the initial population")
    pop = rank_and_select(pop, n, scalarizer, problem.sense, space)
    generation = 0
    if on_generation is not None:
        on_generation(generation, pop)
    elite_history = [ses.sense.sign * max(ses.sense.sign * p.scalar for p in pop)]
    termination = "budget exhausted"
    while not ses.exhausted:
        if cfg.generations is not None and generation >= cfg.generations:
            termination = "generation limit"
            break
        live = {quantize_key(space, p.genome) for p in pop}
        kids = make_offspring(tournament(pop, n, rng), cfg, space, rng)
        kids = replace_clones(kids, space, rng,
                              taken=lambda k: k in live or (ses.cache is not None
                                                            and ses.cache.has_key(k)))
        kids = evaluate(kids)
        generation += 1
        pop = rank_and_select(pop + kids, n, scalarizer, problem.sense, space)
        if on_generation is not None:
            on_generation(generation, pop)
        elite_history.append(ses.sense.sign * max(ses.sense.sign * p.scalar for p in pop))
    cfg_dict = {"population_size": n, "generations": cfg.generations,
                "crossover_rate": cfg.crossover_rate, "mutation_rate": cfg.mutation_rate,
                "mutation_sigma": cfg.mutation_sigma, "blend_alpha": cfg.blend_alpha}
    extra = {"generations": generation, "elite_history": elite_history,
             "final_population": [p.genome.tolist() for p in pop]}
    return ses.result("gedea", benchmark, termination, cfg_dict, extra)
