"""Artificial super-Bee enhanced Colony (AsBeC).

A bee colony whose neighbour move is the IRW three-stage step:

* employed phase: every food source proposes one super-bee move; sources
  marked abandoned propose a scout position instead
* onlooker phase: rank-weighted sources get extra proposals
* scout marking: sources whose trial counter reached the abandonment limit
  are repositioned in the next employed phase, chosen among random
  candidates by space filling plus a bonus near the source whose nectar
  improved most recently

Every proposal is checked against the run's dedupe cache and redrawn when
it repeats an evaluated configuration, so each block is full of fresh
evaluations. The enhancement set and repositioning rule are stand-ins for
an unpublished design; see the README.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .accelerators import Accelerator, AcceleratorConfig, maybe_modify, trend_predict
from .core import Budget, ConfigError, EvaluationRecord, Scalarizer, SearchSpace, Sense, clamp
from .evaluator import Problem, Session
from .irw import chord_vertex
from .results import RunResult

RANDOM, MIRROR, PARABOLA = 0, 1, 2


@dataclass
class AsbecConfig:
    colony_size: int | None = None  # None -> batch size (at least 2)
    abandonment_limit: int | None = None  # None -> colony_size * dim
    step_sigma: float = 0.05
    onlooker_count: int | None = None  # None -> colony_size
    parabola_clip: float = 10.0
    differential_weight: float = 1.0
    scout_candidates: int = 64
    nectar_bonus: float = 0.25
    nectar_window: int = 5
    max_redraws: int = 25

    def __post_init__(self):
        if self.colony_size is not None and self.colony_size < 2:
            raise ConfigError("colony_size must be >= 2")
        if self.abandonment_limit is not None and self.abandonment_limit < 1:
            raise ConfigError("abandonment_limit must be >= 1")
        if self.onlooker_count is not None and self.onlooker_count < 0:
            raise ConfigError("onlooker_count must be >= 0")
        if not 0.0 < self.step_sigma <= 1.0:
            raise ConfigError("step_sigma must lie in (0, 1]")
        if self.scout_candidates < 1:
            raise ConfigError("scout_candidates must be >= 1")

    def resolved(self, batch_size: int, dim: int) -> "AsbecConfig":
        colony = self.colony_size or max(2, batch_size)
        return AsbecConfig(
            colony_size=colony,
            abandonment_limit=self.abandonment_limit or colony * dim,
            step_sigma=self.step_sigma,
            onlooker_count=colony if self.onlooker_count is None else self.onlooker_count,
            parabola_clip=self.parabola_clip,
            differential_weight=self.differential_weight,
            scout_candidates=self.scout_candidates,
            nectar_bonus=self.nectar_bonus,
            nectar_window=self.nectar_window,
            max_redraws=self.max_redraws,
        )


@dataclass
class FoodSource:
    record: EvaluationRecord
    trials: int = 0
    nectar_history: list[float] = field(default_factory=list)
    stage: int = RANDOM
    failed: list[EvaluationRecord] = field(default_factory=list)
    abandoned: bool = False

    def __post_init__(self):
        if not self.nectar_history:
            self.nectar_history = [self.record.scalar]

    @property
    def position(self) -> np.ndarray:
        return self.record.point

    @property
    def value(self) -> float:
        return self.record.scalar

    def nectar_gain(self, sense: Sense) -> float:
        """Improvement over the remembered history, in the larger-is-better sign."""
        h = self.nectar_history
        return sense.sign * (h[-1] - h[0]) if len(h) > 1 else 0.0


def _random_move(source: FoodSource, partner: FoodSource, space: SearchSpace, sigma: float,
                 phi_scale: float, rng: np.random.Generator, p_mod: float | None) -> np.ndarray:
    x = source.position
    phi = rng.uniform(-phi_scale, phi_scale, space.dim)
    gauss = rng.standard_normal(space.dim) * sigma * space.width
    delta = phi * (x - partner.position) + gauss
    if p_mod is not None:
        keep = maybe_modify(np.zeros(space.dim), p_mod, rng) == 0.0
        delta[keep] = 0.0
    return clamp(space, x + delta)


def super_bee_move(source: FoodSource, partner: FoodSource, space: SearchSpace, cfg: AsbecConfig,
                   rng: np.random.Generator, sense: Sense = Sense.MINIMIZE, *,
                   step_scale: float = 1.0, p_mod: float | None = None,
                   fresh: bool = False) -> tuple[np.ndarray, int]:
    """Next proposal of ``source`` and the stage that produced it.

    Stages follow the source's pending state: a fresh random step biased
    along the source-partner difference, then the mirror of the failed step
    about the source, then the vertex of the parabola through both failures
    and the source. ``fresh`` forces a random step.
    """
    sigma = cfg.step_sigma * step_scale
    if not fresh and source.stage == MIRROR and source.failed:
        return clamp(space, 2.0 * source.position - source.failed[0].point), MIRROR
    if not fresh and source.stage == PARABOLA and len(source.failed) == 2:
        r1, r2 = source.failed
        vertex = chord_vertex(source.position, r1.point, r2.point, source.value, r1.scalar,
                              r2.scalar, sense, cfg.parabola_clip)
        if vertex is not None:
            return clamp(space, vertex), PARABOLA
    return _random_move(source, partner, space, sigma, cfg.differential_weight, rng, p_mod), RANDOM


def rank_weights(values, sense: Sense) -> np.ndarray:
    """Best source weighs ``len(values)``, worst 1; ties share the average rank."""
    return rankdata(sense.sign * np.asarray(values, dtype=float), method="average")


def onlooker_select(colony: list[FoodSource], rng: np.random.Generator,
                    sense: Sense = Sense.MINIMIZE) -> int:
    """Index of a source drawn with probability proportional to its rank weight."""
    if not colony:
        raise ValueError("empty colony")
    if len(colony) == 1:
        return 0
    w = rank_weights([s.value for s in colony], sense)
    return int(rng.choice(len(colony), p=w / w.sum()))


def scout_reposition(colony: list[FoodSource], space: SearchSpace, rng: np.random.Generator,
                     sense: Sense = Sense.MINIMIZE, *, n_candidates: int = 64,
                     nectar_bonus: float = 0.25, candidates: np.ndarray | None = None,
                     is_duplicate=None) -> np.ndarray | None:
    """Best of ``n_candidates`` uniform points for a new food source.

    Score = (distance to the nearest current source) + ``nectar_bonus`` *
    (proximity to the source with the largest recent nectar gain), both in
    unit-cube coordinates scaled by the cube diagonal. Ties go to the lowest
    candidate index. Candidates flagged by ``is_duplicate`` are skipped.
    """
    if candidates is None:
        candidates = space.uniform(rng, n_candidates)
    cand = np.atleast_2d(np.asarray(candidates, dtype=float))
    diag = np.sqrt(space.dim)
    u = space.normalize(cand)
    src = space.normalize(np.array([s.position for s in colony]))
    dmin = np.min(np.linalg.norm(u[:, None, :] - src[None, :, :], axis=2), axis=1) / diag
    score = dmin.copy()
    gains = np.array([s.nectar_gain(sense) for s in colony])
    if nectar_bonus > 0 and gains.size and gains.max() > 0:
        lead = src[int(np.argmax(gains))]
        score += nectar_bonus * (1.0 - np.linalg.norm(u - lead, axis=1) / diag)
    order = np.argsort(-score, kind="stable")
    for i in order:
        p = clamp(space, cand[i])
        if is_duplicate is None or not is_duplicate(p):
            return p
    return None


class _Colony:
    """Mutable colony state plus the proposal bookkeeping for one run."""

    def __init__(self, ses: Session, cfg: AsbecConfig, rng: np.random.Generator,
                 acc: Accelerator | None, p_mod: float | None):
        self.ses = ses
        self.cfg = cfg
        self.rng = rng
        self.acc = acc
        self.p_mod = p_mod
        self.sense = ses.sense
        self.space = ses.space
        self.sources: list[FoodSource] = []
        self.phase_blocks = {"init": 0, "employed": 0, "onlooker": 0}
        self.counts = {"scouts": 0, "redraws": 0, "trend": 0, "accepted": 0}

    @property
    def step_scale(self) -> float:
        return self.acc.scale if self.acc else 1.0

    def source_keys(self) -> set[bytes]:
        return {self.ses.key(s.position) for s in self.sources}

    def is_dup(self, p, taken: set[bytes]) -> bool:
        k = self.ses.key(p)
        return k in taken or self.ses.known(p) is not None

    def dedupe(self, make, taken: set[bytes]):
        """Call ``make(fresh)`` until it yields an unseen point; None if it never does."""
        p, stage = make(False)
        tries = 0
        while self.is_dup(p, taken):
            tries += 1
            self.counts["redraws"] += 1
            if tries > self.cfg.max_redraws:
                return None, stage
            p, stage = make(True)
        taken.add(self.ses.key(p))
        return p, stage

    def partner(self, i: int) -> FoodSource:
        j = int(self.rng.integers(len(self.sources) - 1))
        return self.sources[j + 1 if j >= i else j]

    def evaluate(self, points, phase: str) -> list[EvaluationRecord]:
        before = self.ses.ledger.total_blocks
        recs = self.ses.evaluate_many(points)
        self.phase_blocks[phase] += self.ses.ledger.total_blocks - before
        return recs

    def initialize(self, start: np.ndarray | None) -> bool:
        taken: set[bytes] = set()
        pts = []
        if start is not None:
            p = clamp(self.space, start)
            pts.append(p)
            taken.add(self.ses.key(p))
        while len(pts) < self.cfg.colony_size:
            p = clamp(self.space, self.space.uniform(self.rng))
            if not self.is_dup(p, taken):
                taken.add(self.ses.key(p))
                pts.append(p)
        recs = self.evaluate(pts, "init")
        self.sources = [FoodSource(r) for r in recs]
        for r in recs:
            self.note_global(r)
        return len(self.sources) >= 2

    def note_global(self, rec: EvaluationRecord) -> None:
        if self.acc is None:
            return
        if rec is self.ses.best or (len(self.acc.history) == 0):
            self.acc.record_improvement(rec.point, rec.scalar)
        else:
            self.acc.record_failures()

    def apply(self, i: int, rec: EvaluationRecord, stage: int, tracked: bool) -> bool:
        """Greedy update of source ``i`` with ``rec``; returns True on improvement."""
        s = self.sources[i]
        if self.sense.better(rec.scalar, s.value):
            s.record = rec
            s.trials = 0
            s.stage = RANDOM
            s.failed = []
            s.nectar_history = (s.nectar_history + [rec.scalar])[-self.cfg.nectar_window:]
            self.counts["accepted"] += 1
            return True
        s.trials = min(s.trials + 1, self.cfg.abandonment_limit)
        if tracked:
            if stage == RANDOM:
                s.failed, s.stage = [rec], MIRROR
            elif stage == MIRROR:
                s.failed, s.stage = s.failed[:1] + [rec], PARABOLA
            else:
                s.failed, s.stage = [], RANDOM
        return False

    def employed_phase(self) -> None:
        taken = self.source_keys()
        slots = []
        for i, s in enumerate(self.sources):
            if s.abandoned:
                p = scout_reposition(self.sources, self.space, self.rng, self.sense,
                                     n_candidates=self.cfg.scout_candidates,
                                     nectar_bonus=self.cfg.nectar_bonus,
                                     is_duplicate=lambda q: self.is_dup(q, taken))
                if p is not None:
                    taken.add(self.ses.key(p))
                    slots.append((i, p, "scout"))
                continue
            partner = self.partner(i)
            p, stage = self.dedupe(
                lambda fresh, s=s, partner=partner: super_bee_move(
                    s, partner, self.space, self.cfg, self.rng, self.sense,
                    step_scale=self.step_scale, p_mod=self.p_mod, fresh=fresh), taken)
            if p is not None:
                slots.append((i, p, stage))
        recs = self.evaluate([p for _, p, _ in slots], "employed")
        for (i, _, stage), rec in zip(slots, recs):
            self.note_global(rec)
            if stage == "scout":
                self.sources[i] = FoodSource(rec)
                self.counts["scouts"] += 1
            else:
                self.apply(i, rec, stage, tracked=True)

    def onlooker_phase(self) -> None:
        n = self.cfg.onlooker_count
        if n == 0:
            return
        taken = self.source_keys()
        slots = []
        if self.acc is not None:
            cand = trend_predict(self.acc.history)
            if cand is not None and not self.is_dup(cand, taken):
                taken.add(self.ses.key(cand))
                best_i = self.sense.best_index([s.value for s in self.sources])
                slots.append((best_i, cand, "trend", False))
        used: set[int] = set()
        while len(slots) < n:
            i = onlooker_select(self.sources, self.rng, self.sense)
            s = self.sources[i]
            tracked = i not in used
            used.add(i)
            p, stage = self.dedupe(
                lambda fresh, s=s, i=i, tracked=tracked: super_bee_move(
                    s, self.partner(i), self.space, self.cfg, self.rng, self.sense,
                    step_scale=self.step_scale, p_mod=self.p_mod, fresh=fresh or not tracked),
                taken)
            if p is None:
                break
            slots.append((i, p, stage, tracked))
        recs = self.evaluate([p for _, p, _, _ in slots], "onlooker")
        # Per source: the best improving proposal wins; the tracked one drives the stage.
        for (i, _, stage, tracked), rec in sorted(
                zip(slots, recs), key=lambda t: (t[0][0], -self.sense.sign * t[1].scalar)):
            self.note_global(rec)
            if stage == "trend":
                self.counts["trend"] += 1
                self.apply(i, rec, RANDOM, tracked=False)
            else:
                self.apply(i, rec, stage, tracked)

    def mark_scouts(self) -> None:
        for s in self.sources:
            s.abandoned = s.trials >= self.cfg.abandonment_limit


def run_asbec(problem: Problem, cfg: AsbecConfig | None, scalarizer: Scalarizer, budget: Budget,
              rng_seed: int = 0, accelerator: AcceleratorConfig | None = None, *,
              start: np.ndarray | None = None, benchmark: str = "",
              session: Session | None = None) -> RunResult:
    ses = session or Session(problem, scalarizer, budget, rng_seed)
    cfg = (cfg or AsbecConfig()).resolved(ses.batch_size, problem.dim)
    rng = np.random.default_rng([rng_seed, 3])
    acc = Accelerator(accelerator, problem.space, scalarizer.sense) if accelerator else None
    p_mod = accelerator.p_mod(problem.dim) if accelerator else None
    colony = _Colony(ses, cfg, rng, acc, p_mod)
    if not colony.initialize(start):
        raise RuntimeError("budget too small to initialize the colony")
    termination = "budget exhausted"
    iterations = 0
    stalls = 0
    while not ses.exhausted:
        before = ses.ledger.total_evaluations
        colony.employed_phase()
        if ses.exhausted:
            break
        colony.onlooker_phase()
        colony.mark_scouts()
        if acc is not None:
            acc.maybe_resize(ses.best.point)
        iterations += 1
        stalls = stalls + 1 if ses.ledger.total_evaluations == before else 0
        if stalls > 100:
            termination = "stalled on cached points"
            break
    cfg_dict = {k: getattr(cfg, k) for k in ("colony_size", "abandonment_limit", "step_sigma",
                                             "onlooker_count", "scout_candidates", "nectar_bonus")}
    cfg_dict["accelerated"] = acc is not None
    extra = {"iterations": iterations, "phase_blocks": colony.phase_blocks, **colony.counts}
    return ses.result("asbec", benchmark, termination, cfg_dict, extra)
