"""Run results and their on-disk formats (``run.json``, ``trajectory.csv``)."""
from __future__ import annotations

import csv
import datetime as _dt
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

from .core import EvaluationRecord, Scalarizer, SearchSpace, Sense

TRAJECTORY_COLUMNS = ("elapsed_seconds", "eval_index", "best_scalar")
RUN_SCHEMA_VERSION = 1


class TrajectoryPoint(NamedTuple):
    elapsed_seconds: float
    eval_index: int
    best_scalar: float


@dataclass
class RunResult:
    algorithm: str
    benchmark: str
    seed: int
    trajectory: list[TrajectoryPoint]
    final_best: EvaluationRecord
    ledger: dict
    pareto: list[EvaluationRecord]
    records: list[EvaluationRecord]
    termination_reason: str
    scalarizer: Scalarizer
    space: SearchSpace
    objective_names: tuple[str, ...]
    problem_sense: Sense
    elapsed_seconds: float
    config: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)
    created_at: str = field(
        default_factory=lambda: _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"))

    @property
    def total_evaluations(self) -> int:
        return int(self.ledger["total_evaluations"])

    @property
    def total_blocks(self) -> int:
        return int(self.ledger["total_blocks"])

    @property
    def final_scalar(self) -> float:
        return self.final_best.scalar

    def to_dict(self) -> dict:
        by_index = {r.eval_index for r in self.pareto}
        return {
            "schema_version": RUN_SCHEMA_VERSION,
            "algorithm": self.algorithm,
            "benchmark": self.benchmark,
            "seed": self.seed,
            "termination_reason": self.termination_reason,
            "created_at": self.created_at,
            "elapsed_seconds": self.elapsed_seconds,
            "ledger": dict(self.ledger),
            "scalarizer": self.scalarizer.to_dict(),
            "space": self.space.to_dict(),
            "objective_names": list(self.objective_names),
            "problem_sense": self.problem_sense.value,
            "config": self.config,
            "extra": self.extra,
            "final_best": self.final_best.to_dict(),
            "trajectory": [list(t) for t in self.trajectory],
            "pareto_eval_indices": sorted(by_index),
            "records": [r.to_dict() for r in self.records],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        records = [EvaluationRecord.from_dict(r) for r in d["records"]]
        index = {r.eval_index: r for r in records}
        pareto = [index[i] for i in d["pareto_eval_indices"]]
        return cls(
            algorithm=d["algorithm"],
            benchmark=d["benchmark"],
            seed=int(d["seed"]),
            trajectory=[TrajectoryPoint(float(a), int(b), float(c)) for a, b, c in d["trajectory"]],
            final_best=EvaluationRecord.from_dict(d["final_best"]),
            ledger=dict(d["ledger"]),
            pareto=pareto,
            records=records,
            termination_reason=d["termination_reason"],
            scalarizer=Scalarizer.from_dict(d["scalarizer"]),
            space=SearchSpace.from_dict(d["space"]),
            objective_names=tuple(d["objective_names"]),
            problem_sense=Sense(d["problem_sense"]),
            elapsed_seconds=float(d["elapsed_seconds"]),
            config=d.get("config", {}),
            extra=d.get("extra", {}),
            created_at=d.get("created_at", ""),
        )


def write_run_json(result: RunResult, path: Path) -> None:
    Path(path).write_text(json.dumps(result.to_dict(), indent=1) + "\n")


def read_run_json(path: Path) -> RunResult:
    return RunResult.from_dict(json.loads(Path(path).read_text()))


def write_trajectory_csv(trajectory: list[TrajectoryPoint], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(TRAJECTORY_COLUMNS)
        for t in trajectory:
            w.writerow([repr(float(t.elapsed_seconds)), int(t.eval_index), repr(float(t.best_scalar))])


def read_trajectory_csv(path: Path) -> list[TrajectoryPoint]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != TRAJECTORY_COLUMNS:
        raise ValueError(f"unexpected trajectory header {rows[0]}")
    return [TrajectoryPoint(float(a), int(b), float(c)) for a, b, c in rows[1:]]
