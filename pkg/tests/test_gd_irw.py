import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridopt.benchmarks import fitting_like, sphere
from hybridopt.core import Budget, Scalarizer, SearchSpace, Sense
from hybridopt.evaluator import Problem
from hybridopt.gd import (NO_DIRECTION, DegenerateGeometry, GdConfig, estimate_gradient,
                          gradient_from_function, line_search, run_gd)
from hybridopt.irw import chord_vertex, parabola_vertex, random_step, run_irw

from conftest import make_session, sum_squares

UNIT2 = SearchSpace.cube(2, 0.0, 1.0)


# gradient --------------------------------------------------------------------

def test_gradient_of_sum_squares():
    space = SearchSpace(np.array([0.5, 1.5]), np.array([1.5, 2.5]))
    g = gradient_from_function(lambda x: float(np.sum(x**2)), space, np.array([1.0, 2.0]), 1e-6)
    assert np.allclose(g, [2.0, 4.0], atol=1e-4)


def test_gradient_of_constant_is_exact_zero():
    g = gradient_from_function(lambda x: 7.0, UNIT2, np.array([0.3, 0.9]), 1e-3)
    assert np.array_equal(g, np.zeros(2))


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 1.0), st.floats(0.0, 1.0), st.floats(-5, 5), st.floats(-5, 5))
def test_gradient_exact_on_affine(x0, x1, a, b):
    g = gradient_from_function(lambda x: a * x[0] + b * x[1] + 2.0, UNIT2, np.array([x0, x1]),
                               1e-3)
    assert np.allclose(g, [a, b], rtol=1e-10, atol=1e-10)


def test_gradient_at_upper_bound_uses_backward_difference():
    g = gradient_from_function(lambda x: 3.0 * x[0], UNIT2, np.array([1.0, 1.0]), 1e-3)
    assert g[0] == pytest.approx(3.0, abs=1e-12)


def test_session_gradient_is_one_block_of_dim():
    ses = make_session(lambda x: (3.0 * x[0] - x[1],), dim=2, batch=2)
    x = ses.evaluate([np.array([0.2, 0.1])])[0]
    g = estimate_gradient(ses, x, 1e-3)
    assert np.allclose(g, [3.0, -1.0])
    assert ses.ledger.total_blocks == 2 and ses.ledger.total_evaluations == 3


def test_degenerate_geometry():
    ses = make_session(sum_squares, dim=1, batch=1)
    # a zero relative step puts every probe on the base point
    x = ses.evaluate([np.array([0.0])])[0]
    with pytest.raises(DegenerateGeometry):
        estimate_gradient(ses, x, 0.0)


# line search -----------------------------------------------------------------

def test_line_search_lands_on_exact_minimum():
    ses = make_session(lambda x: (float(x[0] ** 2),), dim=1, batch=4, evals=50)
    x = ses.evaluate([np.array([1.0])])[0]
    # grid 1/9, 1/3, 1, 3: step 1 reaches x = 0
    cfg = GdConfig(min_step=1.0 / 9.0, step_growth=3.0, line_search_grid=4)
    step, best = line_search(ses, x, np.array([-1.0]), cfg)
    assert step == 1.0 and best.point[0] == 0.0


def test_line_search_uphill_returns_zero():
    ses = make_session(lambda x: (float(x[0]),), dim=1, batch=4, evals=50)
    x = ses.evaluate([np.array([0.0])])[0]
    step, best = line_search(ses, x, np.array([1.0]), GdConfig())
    assert step == 0.0 and best is x


def test_line_search_zero_direction_signals_termination():
    ses = make_session(sum_squares, dim=2, batch=4)
    x = ses.evaluate([np.array([1.0, 1.0])])[0]
    assert line_search(ses, x, np.zeros(2), GdConfig()) is None


# run_gd ----------------------------------------------------------------------

@pytest.mark.parametrize("dim", [2, 3, 5])
def test_gd_converges_on_round_bowl(dim):
    c = np.linspace(-0.5, 0.5, dim)
    ses = make_session(lambda x: (float(np.sum((x - c) ** 2)),), dim=dim, low=-2, high=2,
                       batch=8, evals=50 * dim)
    res = run_gd(ses.problem, np.full(dim, 1.7), None, ses.scalarizer, ses.budget, session=ses)
    assert np.linalg.norm(res.final_best.point - c) < 1e-4
    assert res.termination_reason == NO_DIRECTION
    assert res.total_evaluations <= 50 * dim


def test_gd_at_minimizer_stops_without_moving():
    b = sphere(3)
    res = run_gd(b.problem, np.zeros(3), None, b.scalarizer, Budget(500, None, 8))
    assert res.termination_reason == NO_DIRECTION
    assert np.array_equal(res.final_best.point, np.zeros(3))
    assert res.extra["iterations"] >= 1


def test_gd_noisy_terminates():
    b = fitting_like(noise_sigma=0.01)
    res = run_gd(b.problem, b.start("far"), None, b.scalarizer, Budget(2000, None, 8))
    assert res.total_evaluations <= 2000


def test_gd_deterministic_and_monotone():
    b = fitting_like(noise_sigma=0.005)
    a = run_gd(b.problem, b.start("near"), None, b.scalarizer, Budget(400, None, 8))
    c = run_gd(b.problem, b.start("near"), None, b.scalarizer, Budget(400, None, 8))
    assert a.trajectory == c.trajectory
    best = [t.best_scalar for t in a.trajectory]
    assert all(y <= x for x, y in zip(best, best[1:]))


def test_gd_maximize():
    fn = lambda x: (float(-np.sum((x - 0.25) ** 2)),)  # noqa: E731
    p = Problem(SearchSpace.cube(2, -1, 1), 1, fn, Sense.MAXIMIZE)
    res = run_gd(p, np.array([0.9, -0.9]), None, Scalarizer((1.0,), Sense.MAXIMIZE),
                 Budget(300, None, 8))
    assert np.allclose(res.final_best.point, 0.25, atol=1e-4)


# IRW -------------------------------------------------------------------------

def test_random_step_limit_and_reproducibility():
    space = SearchSpace.cube(3, -1, 1)
    x = np.array([0.1, 0.2, 0.3])
    assert np.allclose(random_step(x, space, 1e-15, np.random.default_rng(0)), x)
    a = random_step(x, space, 0.05, np.random.default_rng(5))
    b = random_step(x, space, 0.05, np.random.default_rng(5))
    assert np.array_equal(a, b)


def test_random_step_std():
    space = SearchSpace(np.array([-100.0, -10.0]), np.array([100.0, 10.0]))
    rng = np.random.default_rng(9)
    draws = np.array([random_step(np.zeros(2), space, 0.05, rng) for _ in range(100_000)])
    assert np.allclose(draws.std(axis=0) / (0.05 * space.width), 1.0, atol=0.02)


@pytest.mark.parametrize("pts,want", [([(-1, 1), (0, 0), (1, 1)], 0.0),
                                      ([(0, 1), (1, 0), (2, 1)], 1.0)])
def test_parabola_vertex_examples(pts, want):
    assert parabola_vertex(pts) == want


def test_parabola_vertex_collinear_and_wrong_curvature():
    assert parabola_vertex([(0, 0), (1, 1), (2, 2)]) is None
    assert parabola_vertex([(-1, -1), (0, 0), (1, -1)], Sense.MINIMIZE) is None
    assert parabola_vertex([(-1, -1), (0, 0), (1, -1)], Sense.MAXIMIZE) == 0.0


@settings(max_examples=100, deadline=None)
@given(st.floats(0.1, 10), st.floats(-1, 1), st.floats(0.05, 1), st.floats(-0.5, 0.5))
def test_chord_vertex_exact_on_quadratic(a, x_star, step, frac):
    c = x_star + frac * step
    f = lambda x: a * (x - c) ** 2  # noqa: E731
    v = chord_vertex(np.array([x_star]), np.array([x_star + step]), np.array([x_star - step]),
                     f(x_star), f(x_star + step), f(x_star - step), Sense.MINIMIZE, 10.0)
    assert v is not None and abs(v[0] - c) < 1e-12 * max(1.0, abs(c))


def test_irw_stage_three_hits_minimizer_in_1d():
    # exact vertices on a quadratic pin the walk to the minimizer
    c = 0.37
    fn = lambda x: (float((x[0] - c) ** 2),)  # noqa: E731
    ses = make_session(fn, dim=1, low=-1, high=1, batch=1, evals=200)
    res = run_irw(ses.problem, np.array([-0.8]), None, ses.scalarizer, ses.budget, 1,
                  session=ses)
    assert res.extra["stage3"] >= 1
    assert abs(res.final_best.point[0] - c) < 1e-9


@pytest.mark.parametrize("n", [1, 57, 193])
def test_irw_accounting(n):
    b = fitting_like()
    res = run_irw(b.problem, b.start("far"), None, b.scalarizer, Budget(n, None, 8), 0)
    assert res.total_evaluations == n and res.total_blocks == n
    assert res.ledger["batch_size"] == 1


def test_irw_constant_objective_runs_to_budget():
    ses = make_session(lambda x: (1.0,), dim=2, batch=1, evals=50)
    res = run_irw(ses.problem, np.zeros(2), None, ses.scalarizer, ses.budget, 0, session=ses)
    assert res.total_evaluations == 50
    assert res.final_best.eval_index == 1


def test_irw_deterministic():
    b = fitting_like(noise_sigma=0.005)
    runs = [run_irw(b.problem, b.start("far"), None, b.scalarizer, Budget(150), 4)
            for _ in range(2)]
    assert runs[0].trajectory == runs[1].trajectory
    other = run_irw(b.problem, b.start("far"), None, b.scalarizer, Budget(150), 5)
    assert other.trajectory != runs[0].trajectory
