import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridopt.benchmarks import FITTING_COST_SECONDS, blade_like, fitting_like
from hybridopt.core import (Budget, ConfigError, EvaluationRecord, ObjectiveReport, Scalarizer,
                            SearchSpace, Sense, quantize_key)
from hybridopt.gedea import (GedeaConfig, Individual, blend, diversity, init_population,
                             make_offspring, rank_and_select, replace_clones, run_gedea)

SPACE = SearchSpace(np.array([-1.0, 0.0, 2.0]), np.array([1.0, 4.0, 3.0]))


def keys(pop, space=SPACE):
    return [quantize_key(space, p.genome) for p in pop]


def evaluated(genome, values, sense=Sense.MAXIMIZE, weights=None):
    s = Scalarizer(weights or (1.0,) * len(values), sense)
    rep = ObjectiveReport(tuple(values))
    g = np.asarray(genome, dtype=float)
    return Individual(g, EvaluationRecord(g, rep, s(rep), 0, 0, 0.0))


def test_init_population_in_bounds_clone_free_and_seeded():
    rng = np.random.default_rng(0)
    seed = np.array([0.5, 1.0, 2.5])
    pop = init_population(SPACE, 12, rng, [seed, seed])
    assert len(pop) == 12 and np.array_equal(pop[0].genome, seed)
    assert all(SPACE.contains(p.genome) for p in pop)
    assert len(set(keys(pop))) == 12
    a = init_population(SPACE, 6, np.random.default_rng(4))
    b = init_population(SPACE, 6, np.random.default_rng(4))
    assert all(np.array_equal(x.genome, y.genome) for x, y in zip(a, b))


def test_identity_operators():
    rng = np.random.default_rng(1)
    parents = init_population(SPACE, 6, rng)
    cfg = GedeaConfig(crossover_rate=0.0, mutation_rate=0.0)
    kids = make_offspring(parents, cfg, SPACE, rng)
    assert all(np.array_equal(k.genome, p.genome) for k, p in zip(kids, parents))


def test_vanishing_mutation_matches_crossover():
    # crossover consumes its random draws before any mutation draw, so equal
    # seeds give equal crossover output
    parents = init_population(SPACE, 6, np.random.default_rng(2))
    plain = make_offspring(parents, GedeaConfig(mutation_rate=0.0), SPACE,
                           np.random.default_rng(3))
    tiny = make_offspring(parents, GedeaConfig(mutation_rate=1.0, mutation_sigma=1e-12), SPACE,
                          np.random.default_rng(3))
    assert all(np.allclose(a.genome, b.genome, rtol=0, atol=1e-10) for a, b in zip(plain, tiny))
    assert any(not np.array_equal(a.genome, b.genome) for a, b in zip(plain, tiny))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-5, 5), min_size=4, max_size=4),
       st.lists(st.floats(-5, 5), min_size=4, max_size=4), st.floats(0, 1), st.integers(0, 999))
def test_blend_within_extended_interval(p1, p2, alpha, seed):
    a, b = np.array(p1), np.array(p2)
    child = blend(a, b, alpha, np.random.default_rng(seed))
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    span = hi - lo
    assert np.all(child >= lo - alpha * span - 1e-12)
    assert np.all(child <= hi + alpha * span + 1e-12)


def test_replace_clones_examples():
    rng = np.random.default_rng(6)
    g = np.array([0.1, 1.0, 2.2])
    out = replace_clones([Individual(g.copy()) for _ in range(5)], SPACE, rng)
    assert np.array_equal(out[0].genome, g)
    assert len(set(keys(out))) == 5
    free = init_population(SPACE, 6, rng)
    again = replace_clones(free, SPACE, rng)
    assert all(a is b for a, b in zip(again, free))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(0, 3), min_size=2, max_size=20), st.integers(0, 999))
def test_replace_clones_output_clone_free(picks, seed):
    rng = np.random.default_rng(seed)
    base = init_population(SPACE, 4, rng)
    pop = [Individual(base[i].genome.copy()) for i in picks]
    out = replace_clones(pop, SPACE, rng)
    ks = keys(out)
    for i in range(len(ks)):
        for j in range(i + 1, len(ks)):
            assert ks[i] != ks[j]


def has(pop, ind):
    return any(p is ind for p in pop)


def test_selection_single_rank_keeps_most_diverse_plus_elite():
    space = SearchSpace.cube(1, 0, 10)
    # a mutually non-dominated set on two objectives; positions fix the diversity
    pos = [0.0, 0.5, 1.0, 5.0, 9.0, 10.0]
    pop = [evaluated([x], (x, 10 - x)) for x in pos]
    pop[1] = evaluated([0.5], (0.5, 9.6))  # best weighted sum, crowded position
    s = Scalarizer((1.0, 1.0), Sense.MAXIMIZE)
    out = rank_and_select(pop, 3, s, Sense.MAXIMIZE, space)
    assert len(out) == 3 and has(out, pop[1])
    assert has(out, pop[3])  # the most diverse member


def test_selection_elite_survives_when_dominated_in_plain_objectives():
    space = SearchSpace.cube(2)
    s = Scalarizer((1.0, 0.0), Sense.MAXIMIZE)
    # ties on the weighted sum go to the first member, so the elite comes first
    elite = evaluated([0.52, 0.1], (1.0, 0.0), weights=(1.0, 0.0))
    others = [evaluated([x, 0.1], (1.0, 1.0), weights=(1.0, 0.0))
              for x in np.linspace(0.0, 1.0, 7)]
    out = rank_and_select([elite] + others, 4, s, Sense.MAXIMIZE, space)
    assert elite.rank > 1
    assert has(out, elite) and len(out) == 4


def test_selection_two_individuals_survive():
    space = SearchSpace.cube(1)
    s = Scalarizer((1.0,), Sense.MAXIMIZE)
    pop = [evaluated([0.1], (1.0,)), evaluated([0.9], (0.0,))]
    assert rank_and_select(pop, 2, s, Sense.MAXIMIZE, space) == pop


@pytest.mark.parametrize("make,blocks,evals", [
    (lambda: fitting_like(noise_sigma=0.005), 138, 1104),
    (lambda: blade_like(), 420, 3360),
])
def test_gedea_time_budget_accounting(make, blocks, evals):
    b = make()
    res = run_gedea(b.problem, None, b.scalarizer,
                    Budget(None, blocks * b.problem.cost_seconds, 8), 0)
    assert (res.total_evaluations, res.total_blocks) == (evals, blocks)


def test_gedea_run_invariants_and_reproducibility():
    b = blade_like()
    seen = []

    def watch(gen, pop):
        seen.append((len(pop), len(set(keys(pop, b.problem.space))),
                     max(p.scalar for p in pop)))

    res = run_gedea(b.problem, None, b.scalarizer, Budget(200, None, 8), 9, on_generation=watch)
    assert all(n == m == 8 for n, m, _ in seen)
    elites = [e for _, _, e in seen]
    assert all(y >= x for x, y in zip(elites, elites[1:]))
    assert elites == res.extra["elite_history"]
    vals = [np.array(r.report.values) for r in res.pareto]
    for a in vals:
        for c in vals:
            assert not (np.all(a >= c) and np.any(a > c))
    again = run_gedea(b.problem, None, b.scalarizer, Budget(200, None, 8), 9)
    assert again.trajectory == res.trajectory


def test_gedea_minimize_elite_non_increasing():
    b = fitting_like(noise_sigma=0.005)
    res = run_gedea(b.problem, GedeaConfig(population_size=10), b.scalarizer,
                    Budget(None, 30 * FITTING_COST_SECONDS, 10), 2)
    hist = res.extra["elite_history"]
    assert all(y <= x for x, y in zip(hist, hist[1:]))
    assert res.total_blocks == 30


def test_gedea_generation_limit():
    b = fitting_like()
    res = run_gedea(b.problem, GedeaConfig(generations=3), b.scalarizer, Budget(1000, None, 8), 0)
    assert res.extra["generations"] == 3 and res.termination_reason == "generation limit"
    assert res.total_evaluations == 32


def test_gedea_config_validation():
    with pytest.raises(ConfigError):
        GedeaConfig(population_size=5)
    with pytest.raises(ConfigError):
        GedeaConfig(crossover_rate=1.5)
