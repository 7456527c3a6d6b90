"""Semi-random walk with second-order interpolation (IRW).

From the incumbent ``x*`` the walk tries a Gaussian step ``x1``; if that
does not improve it tries the mirrored point ``x2 = clamp(2 x* - x1)``; if
neither improves, it fits a parabola through ``(x2, x*, x1)`` along the
step chord and tries the vertex. The walk is serial: one point per block.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .accelerators import Accelerator, AcceleratorConfig, maybe_modify
from .core import Budget, ConfigError, Scalarizer, SearchSpace, Sense, clamp
from .evaluator import Problem, Session
from .results import RunResult

# Consecutive iterations allowed to hit only cached points before giving up.
_MAX_STALLS = 1000


@dataclass
class IrwConfig:
    step_sigma: float = 0.05
    parabola_clip: float = 10.0

    def __post_init__(self):
        if not 0.0 < self.step_sigma <= 1.0:
            raise ConfigError("step_sigma must lie in (0, 1]")
        if not self.parabola_clip > 0:
            raise ConfigError("parabola_clip must be positive")


def random_step(x: np.ndarray, space: SearchSpace, step_sigma: float,
                rng: np.random.Generator, p_mod: float | None = None) -> np.ndarray:
    """``clamp(x + delta)`` with ``delta_i ~ N(0, (step_sigma * range_i)^2)``.

    With ``p_mod`` set only a random subset of coordinates moves.
    """
    scale = step_sigma * space.width
    if p_mod is None:
        return clamp(space, np.asarray(x) + rng.standard_normal(space.dim) * scale)
    return clamp(space, maybe_modify(x, p_mod, rng, scale))


def parabola_vertex(pts, sense: Sense | str = Sense.MINIMIZE) -> float | None:
    """Abscissa of the extremum of the parabola through three ``(s, f)`` pairs.

    Returns None if the points are collinear or the curvature has the wrong
    sign for ``sense`` (a maximum when minimizing, or vice versa).
    """
    (s0, f0), (s1, f1), (s2, f2) = sorted(pts)
    if s0 == s1 or s1 == s2:
        raise ValueError("parabola_vertex needs three distinct abscissae")
    # Newton divided differences: f = f0 + d1 (s - s0) + a (s - s0)(s - s1)
    d01 = (f1 - f0) / (s1 - s0)
    d12 = (f2 - f1) / (s2 - s1)
    a = (d12 - d01) / (s2 - s0)
    sense = Sense(sense)
    if a == 0.0 or (a < 0 and sense is Sense.MINIMIZE) or (a > 0 and sense is Sense.MAXIMIZE):
        return None
    return 0.5 * (s0 + s1) - d01 / (2.0 * a)


def chord_vertex(x_star: np.ndarray, x1: np.ndarray, x2: np.ndarray,
                 f_star: float, f1: float, f2: float, sense: Sense,
                 clip: float) -> np.ndarray | None:
    """Vertex point of the parabola through ``x2, x*, x1`` along ``u = x1 - x*``.

    ``x2`` must lie on the line through ``x*`` and ``x1``; its abscissa is
    -1 for an exact mirror and closer to 0 when clamping shortened it.
    The vertex abscissa is clipped to ``[-clip, clip]`` step lengths.
    """
    u = np.asarray(x1) - x_star
    uu = float(u @ u)
    if uu == 0.0:
        return None
    v = np.asarray(x2) - x_star
    s2 = float(v @ u) / uu
    if s2 >= 0.0 or np.linalg.norm(v - s2 * u) > 1e-9 * np.sqrt(uu):
        return None
    s = parabola_vertex([(s2, f2), (0.0, f_star), (1.0, f1)], sense)
    if s is None:
        return None
    s = float(np.clip(s, -clip, clip))
    return x_star + s * u


def run_irw(problem: Problem, start: np.ndarray, cfg: IrwConfig | None, scalarizer: Scalarizer,
            budget: Budget, rng_seed: int = 0, accelerator: AcceleratorConfig | None = None,
            *, benchmark: str = "", session: Session | None = None) -> RunResult:
    cfg = cfg or IrwConfig()
    budget = Budget(budget.max_evaluations, budget.max_seconds, 1)
    ses = session or Session(problem, scalarizer, budget, rng_seed)
    space = problem.space
    sense = scalarizer.sense
    rng = np.random.default_rng([rng_seed, 77])
    acc = Accelerator(accelerator, space, sense) if accelerator is not None else None
    p_mod = accelerator.p_mod(space.dim) if accelerator is not None else None

    def try_point(p):
        recs = ses.evaluate([clamp(space, p)])
        return recs[0] if recs else None

    best = try_point(start)
    if best is None:
        raise RuntimeError("budget too small to evaluate the start point")
    if acc:
        acc.record_improvement(best.point, best.scalar)
    termination = "budget exhausted"
    stalls, evals_seen = 0, -1
    stats = {"accepted": 0, "stage1": 0, "stage2": 0, "stage3": 0, "trend": 0}

    def accept(rec, stage):
        nonlocal best
        if rec is not None and sense.better(rec.scalar, best.scalar):
            best = rec
            stats["accepted"] += 1
            stats[stage] += 1
            if acc:
                acc.record_improvement(rec.point, rec.scalar)
            return True
        if acc and rec is not None:
            acc.record_failures()
        return False

    while not ses.exhausted:
        if acc is not None:
            cand = acc.take_trend()
            if cand is not None and accept(try_point(cand), "trend"):
                continue
        if ses.ledger.total_evaluations == evals_seen:
            stalls += 1
            if stalls > _MAX_STALLS:
                termination = "stalled on cached points"
                break
        else:
            stalls = 0
        evals_seen = ses.ledger.total_evaluations
        sigma = cfg.step_sigma * (acc.scale if acc else 1.0)
        x_star = best.point
        r1 = try_point(random_step(x_star, space, sigma, rng, p_mod))
        if r1 is None or accept(r1, "stage1"):
            continue
        r2 = try_point(2.0 * x_star - r1.point)
        if r2 is None or accept(r2, "stage2"):
            continue
        vertex = chord_vertex(x_star, r1.point, r2.point, best.scalar, r1.scalar, r2.scalar,
                              sense, cfg.parabola_clip)
        if vertex is not None:
            accept(try_point(vertex), "stage3")
        if acc:
            acc.maybe_resize(best.point)

    extra = dict(stats)
    if acc:
        extra["resizes"] = acc.resizes
    cfg_dict = {"step_sigma": cfg.step_sigma, "parabola_clip": cfg.parabola_clip,
                "accelerated": acc is not None}
    return ses.result("irw", benchmark, termination, cfg_dict, extra)
