"""Steepest descent with parallel finite differences and a parallel line search.

Deterministic: the gradient uses one block of ``dim`` forward differences,
the step length is picked from a geometric grid evaluated in one block and
refined once in a second block. When no step improves, the difference step
is refined; once the smallest difference step fails too, the run stops.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Budget, ConfigError, EvaluationRecord, Scalarizer, SearchSpace, clamp
from .evaluator import Problem, Session
from .irw import parabola_vertex
from .results import RunResult

NO_DIRECTION = "no improvement direction"


class DegenerateGeometry(RuntimeError):
    """Every finite-difference probe collapsed onto the base point."""


@dataclass
class GdConfig:
    fd_step: float = 1e-4
    min_fd_step: float = 1e-5
    fd_refine: float = 0.1
    line_search_grid: int | None = None  # None -> batch size
    step_growth: float = 3.0
    min_step: float = 1e-3
    tie_tolerance: float = 0.0
    max_iterations: int = 10_000

    def __post_init__(self):
        if not 0 < self.min_fd_step <= self.fd_step:
            raise ConfigError("need 0 < min_fd_step <= fd_step")
        if not 0 < self.fd_refine < 1:
            raise ConfigError("fd_refine must lie in (0, 1)")
        if self.line_search_grid is not None and self.line_search_grid < 1:
            raise ConfigError("line_search_grid must be positive")
        if not self.step_growth > 1:
            raise ConfigError("step_growth must exceed 1")
        if not self.min_step > 0:
            raise ConfigError("min_step must be positive")

    def grid_size(self, batch_size: int) -> int:
        return self.line_search_grid or batch_size


def fd_points(space: SearchSpace, x: np.ndarray, h: float) -> tuple[list[np.ndarray], np.ndarray]:
    """Probe points ``x + h*range_i*e_i`` and their signed offsets.

    A probe that would leave the box steps backwards instead; the offset
    keeps the sign so the difference quotient stays correct.
    """
    steps = h * space.width
    pts, offsets = [], np.empty(space.dim)
    for i in range(space.dim):
        delta = steps[i] if x[i] + steps[i] <= space.upper[i] else -steps[i]
        p = np.array(x, dtype=float)
        p[i] += delta
        p = clamp(space, p)
        offsets[i] = p[i] - x[i]
        pts.append(p)
    return pts, offsets


def estimate_gradient(ses: Session, x: EvaluationRecord, h: float,
                      tie_tolerance: float = 0.0) -> np.ndarray | None:
    """Forward-difference gradient of the scalarized objective at ``x`` in one block.

    Returns None if the budget ran out before the block could complete.
    """
    pts, offsets = fd_points(ses.space, x.point, h)
    if np.all(offsets == 0.0):
        raise DegenerateGeometry("all finite-difference probes coincide with the base point")
    recs = ses.evaluate(pts)
    if len(recs) < len(pts):
        return None
    diffs = np.array([r.scalar - x.scalar for r in recs])
    diffs[np.abs(diffs) <= tie_tolerance] = 0.0
    g = np.zeros(ses.space.dim)
    nz = offsets != 0.0
    g[nz] = diffs[nz] / offsets[nz]
    return g


def gradient_from_function(f, space: SearchSpace, x: np.ndarray, h: float) -> np.ndarray:
    """Same forward-difference rule applied to a plain callable (no accounting)."""
    pts, offsets = fd_points(space, np.asarray(x, dtype=float), h)
    fx = f(x)
    return np.array([(f(p) - fx) / o if o != 0 else 0.0 for p, o in zip(pts, offsets)])


def _steps_to_points(space, x, direction, steps):
    return [clamp(space, x + s * direction) for s in steps]


def line_search(ses: Session, x: EvaluationRecord, direction: np.ndarray, cfg: GdConfig,
                center: float | None = None) -> tuple[float, EvaluationRecord] | None:
    """Best step along ``direction`` from a geometric grid, refined once.

    Stage one evaluates ``grid`` steps ``s0 * growth**k``, with ``s0 =
    min_step`` or, when ``center`` is given, a grid centered on it. Stage
    two refines: a finer grid spanning one growth factor either side of the
    stage-one winner, a continuation upwards if the winner is the largest
    step, or smaller steps if nothing improved. Returns ``(0.0, x)`` if no candidate
    improves on ``x``, and None for a zero direction (termination signal).
    """
    direction = np.asarray(direction, dtype=float)
    if not np.any(direction):
        return None
    n = cfg.grid_size(ses.batch_size)
    g = cfg.step_growth
    if center is None:
        steps = cfg.min_step * g ** np.arange(n)
    else:
        steps = center * g ** (np.arange(n) - (n - 1) // 2)
    best_step, best = 0.0, x
    for stage in range(2):
        recs = ses.evaluate(_steps_to_points(ses.space, x.point, direction, steps))
        for s, r in zip(steps, recs):
            if ses.better(r.scalar, best.scalar):
                best_step, best = float(s), r
        if stage == 1 or len(recs) < len(steps) or ses.exhausted:
            break
        if best_step == 0.0:
            # nothing improved: look below the grid
            steps = steps[0] * g ** -np.arange(1, n + 1)
        elif best_step == steps[-1]:
            # winner on the upper edge: keep growing instead of refining
            steps = best_step * g ** np.arange(1, n + 1)
        else:
            steps = _refined_steps(steps, recs, best_step, x.scalar, g, n, ses.sense)
    return best_step, best


def _refined_steps(steps, recs, best_step, f0, g, n, sense):
    """Parabolic vertex through the winner and its neighbours, plus a finer grid."""
    k = int(np.flatnonzero(steps == best_step)[0])
    profile = [(0.0, f0)] + [(float(s), r.scalar) for s, r in zip(steps, recs)]
    left, mid, right = profile[k], profile[k + 1], profile[k + 2]
    out = []
    vertex = parabola_vertex([left, mid, right], sense)
    if vertex is not None and left[0] < vertex < right[0] and vertex != best_step:
        out.append(vertex)
    fine = best_step * g ** np.linspace(-1.0, 1.0, n + 1)[1:-1]
    fine = fine[~np.isclose(fine, best_step, rtol=1e-12, atol=0.0)]
    out.extend(fine[: n - len(out)])
    return np.array(out)


def run_gd(problem: Problem, start: np.ndarray, cfg: GdConfig | None, scalarizer: Scalarizer,
           budget: Budget, *, benchmark: str = "", rng_seed: int = 0,
           session: Session | None = None) -> RunResult:
    cfg = cfg or GdConfig()
    ses = session or Session(problem, scalarizer, budget, rng_seed)
    space = problem.space
    sign = scalarizer.sense.sign
    recs = ses.evaluate([clamp(space, start)])
    if not recs:
        raise RuntimeError("budget too small to evaluate the start point")
    x = recs[0]
    h = cfg.fd_step
    termination = "budget exhausted"
    center = None
    iterations = 0
    while iterations < cfg.max_iterations:
        if ses.exhausted:
            break
        iterations += 1
        try:
            g = estimate_gradient(ses, x, h, cfg.tie_tolerance)
        except DegenerateGeometry:
            termination = "degenerate geometry"
            break
        if g is None:
            break
        # Ascend for maximize, descend for minimize; measured in unit-cube
        # coordinates so the step grid is scale free.
        direction = sign * g * space.width**2
        norm = np.linalg.norm(direction / space.width)
        found = None
        if norm > 0:
            found = line_search(ses, x, direction / norm, cfg, center)
        if found is None or found[0] == 0.0:
            if ses.exhausted and found is not None:
                break
            if h * cfg.fd_refine >= cfg.min_fd_step * (1 - 1e-12):
                h *= cfg.fd_refine
                center = None
                continue
            termination = NO_DIRECTION
            break
        step, x = found
        center = step
    else:
        termination = "iteration limit"
    return ses.result("gd", benchmark, termination,
                      {"fd_step": cfg.fd_step, "min_fd_step": cfg.min_fd_step,
                       "step_growth": cfg.step_growth, "min_step": cfg.min_step},
                      {"iterations": iterations, "final_fd_step": h})
