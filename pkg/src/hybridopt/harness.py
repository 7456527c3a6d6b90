"""Running algorithms on benchmarks, repeating with seeds, and reporting.

Output files:

* ``run.json``: the full :class:`RunResult` (see :meth:`RunResult.to_dict`)
* ``trajectory.csv``: ``elapsed_seconds, eval_index, best_scalar``
* ``summary.csv``: ``algorithm, mean_total_evals, batch_size, mean_blocks,
  mean_final, std_final, mean_seconds``; ``summary.json`` adds the repeat
  count and a flag for single-repeat (degenerate) standard deviations
* ``pareto.csv``: one row per archive member, parameters then objectives
  then ``weighted_sum``, best weighted sum first
"""
from __future__ import annotations

import configparser
import csv
import dataclasses
import inspect
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .accelerators import AcceleratorConfig
from .ann import AnnConfig
from .asbec import AsbecConfig, run_asbec
from .benchmarks import BENCHMARKS, BenchmarkSpec, make_benchmark
from .core import Budget, ConfigError, EvaluationRecord, Scalarizer, UsageError
from .evaluator import Session
from .gd import GdConfig, run_gd
from .gedea import GedeaConfig, run_gedea
from .irw import IrwConfig, run_irw
from .results import RunResult, read_run_json, write_run_json, write_trajectory_csv
from .surrogate import SurrogateConfig, run_loh_ann

ALGORITHMS = ("gd", "irw", "asbec", "gedea", "loh_ann")
SUMMARY_COLUMNS = ("algorithm", "mean_total_evals", "batch_size", "mean_blocks", "mean_final",
                   "std_final", "mean_seconds")
OUTPUT_ENV = "HYBRIDOPT_OUTPUT"

_SECTION_TYPES = {"gd": GdConfig, "irw": IrwConfig, "asbec": AsbecConfig, "gedea": GedeaConfig,
                  "loh_ann": SurrogateConfig, "accel": AcceleratorConfig}


def output_root() -> Path:
    return Path(os.environ.get(OUTPUT_ENV, "."))


def normalize_error_ratio(value: float, reference: float) -> float:
    if not reference > 0:
        raise ConfigError("reference value must be positive")
    return value / reference


@dataclass
class RunSpec:
    algo: str
    problem: str
    budget_evals: int | None = None
    budget_seconds: float | None = None
    batch: int = 8
    seed: int = 0
    start: str = "far"
    accel: bool = False
    real_time: bool = False
    noise: float | None = None
    dim: int | None = None
    problem_seed: int = 0

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise UsageError(f"unknown algorithm {self.algo!r}; choose from {', '.join(ALGORITHMS)}")
        if self.problem not in BENCHMARKS:
            raise UsageError(f"unknown benchmark {self.problem!r}; "
                             f"choose from {', '.join(sorted(BENCHMARKS))}")
        if self.budget_evals is None and self.budget_seconds is None:
            raise ConfigError("[run] set budget_evals and/or budget_seconds")
        if self.batch < 1:
            raise ConfigError("[run] batch must be positive")

    def budget(self) -> Budget:
        return Budget(self.budget_evals, self.budget_seconds, self.batch)


def _convert(section: str, key: str, raw: str, default):
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return low in ("1", "true", "yes", "on")
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if raw.strip().lower() in ("", "none"):
            return None
        try:
            return int(raw)
        except ValueError:
            return float(raw)
    except ValueError:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None


def build_config(section: str, values: dict[str, str]):
    """Dataclass config for ``section`` from string values; unknown keys are errors."""
    if section == "run":
        raise ConfigError("the [run] section is handled by RunSpec")
    try:
        cls = _SECTION_TYPES[section]
    except KeyError:
        raise ConfigError(f"unknown config section [{section}]") from None
    base = cls()
    fields = {f.name for f in dataclasses.fields(cls)}
    kwargs, ann_kwargs = {}, {}
    ann_fields = {f.name for f in dataclasses.fields(AnnConfig)}
    for key, raw in values.items():
        if key in fields and key != "ann":
            kwargs[key] = _convert(section, key, raw, getattr(base, key))
        elif section == "loh_ann" and key in ann_fields:
            ann_kwargs[key] = _convert(section, key, raw, getattr(base.ann, key))
        else:
            raise ConfigError(f"[{section}] unknown key {key!r}")
    if ann_kwargs:
        kwargs["ann"] = _checked(section, AnnConfig, ann_kwargs)
    return _checked(section, cls, kwargs)


def _checked(section, cls, kwargs):
    try:
        return cls(**kwargs)
    except ConfigError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def read_config(path: str | Path | None) -> dict[str, dict[str, str]]:
    """Sections of an INI file as plain dicts (empty if ``path`` is None)."""
    if path is None:
        return {}
    parser = configparser.ConfigParser()
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    sections = {s: dict(parser[s]) for s in parser.sections()}
    for s in sections:
        if s != "run" and s not in _SECTION_TYPES:
            raise ConfigError(f"unknown config section [{s}]")
    return sections


def run_spec_from(sections: dict[str, dict[str, str]], **overrides) -> RunSpec:
    """RunSpec from the ``[run]`` section with non-None ``overrides`` on top."""
    values = dict(sections.get("run", {}))
    known = {f.name: f for f in dataclasses.fields(RunSpec)}
    kwargs = {}
    for key, raw in values.items():
        if key not in known:
            raise ConfigError(f"[run] unknown key {key!r}")
        if key in ("algo", "problem", "start"):
            kwargs[key] = raw.strip()
            continue
        default = known[key].default
        kwargs[key] = _convert("run", key, raw, default)
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    for key in ("algo", "problem"):
        if key not in kwargs:
            raise UsageError(f"missing --{key}")
    return RunSpec(**kwargs)


def benchmark_for(spec: RunSpec) -> BenchmarkSpec:
    factory = BENCHMARKS[spec.problem]
    accepted = inspect.signature(factory).parameters
    kw = {"rng_seed": spec.problem_seed}
    if spec.noise is not None:
        if "noise_sigma" not in accepted:
            raise ConfigError(f"[run] benchmark {spec.problem} takes no noise setting")
        kw["noise_sigma"] = spec.noise
    if spec.dim is not None:
        kw["dim"] = spec.dim
    return make_benchmark(spec.problem, **kw)


def execute(spec: RunSpec, sections: dict[str, dict[str, str]] | None = None,
            bench: BenchmarkSpec | None = None) -> RunResult:
    """One (algorithm, benchmark, seed) run."""
    sections = sections or {}
    bench = bench or benchmark_for(spec)
    cfg = build_config(spec.algo, sections.get(spec.algo, {}))
    accel = build_config("accel", sections.get("accel", {})) if spec.accel else None
    problem = bench.problem
    start = bench.start(spec.start)
    budget = spec.budget()
    common = {"benchmark": bench.name}
    if spec.algo == "irw":
        budget = Budget(budget.max_evaluations, budget.max_seconds, 1)
    session = Session(problem, bench.scalarizer, budget, spec.seed, real_time=spec.real_time)
    if spec.algo == "gd":
        return run_gd(problem, start, cfg, bench.scalarizer, budget, rng_seed=spec.seed,
                      session=session, **common)
    if spec.algo == "irw":
        return run_irw(problem, start, cfg, bench.scalarizer, budget, spec.seed, accel,
                       session=session, **common)
    if spec.algo == "asbec":
        return run_asbec(problem, cfg, bench.scalarizer, budget, spec.seed, accel, start=start,
                         session=session, **common)
    if spec.algo == "gedea":
        return run_gedea(problem, cfg, bench.scalarizer, budget, spec.seed, start=start,
                         session=session, **common)
    return run_loh_ann(problem, cfg, bench.scalarizer, budget, spec.seed, session=session, **common)


def write_run(result: RunResult, outdir: Path) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_run_json(result, outdir / "run.json")
    write_trajectory_csv(result.trajectory, outdir / "trajectory.csv")
    return outdir


@dataclass
class ComparisonRow:
    algorithm: str
    mean_total_evals: float
    batch_size: int
    mean_blocks: float
    mean_final: float
    std_final: float
    mean_seconds: float
    repeats: int = 1
    degenerate: bool = False
    finals: list[float] = field(default_factory=list)

    @classmethod
    def from_results(cls, algorithm: str, results: list[RunResult]) -> "ComparisonRow":
        if not results:
            raise UsageError("no results to aggregate")
        finals = [r.final_scalar for r in results]
        r = len(results)
        return cls(
            algorithm=algorithm,
            mean_total_evals=float(np.mean([x.total_evaluations for x in results])),
            batch_size=int(results[0].ledger["batch_size"]),
            mean_blocks=float(np.mean([x.total_blocks for x in results])),
            mean_final=float(np.mean(finals)),
            std_final=float(np.std(finals, ddof=1)) if r > 1 else 0.0,
            mean_seconds=float(np.mean([x.elapsed_seconds for x in results])),
            repeats=r,
            degenerate=r == 1,
            finals=finals,
        )

    def csv_row(self) -> list[str]:
        return [self.algorithm, repr(self.mean_total_evals), str(self.batch_size),
                repr(self.mean_blocks), repr(self.mean_final), repr(self.std_final),
                repr(self.mean_seconds)]


def compare(specs: list[RunSpec], repeats: int, outdir: Path,
            sections: dict[str, dict[str, str]] | None = None) -> list[ComparisonRow]:
    """``repeats`` runs per spec with seeds ``spec.seed + i``; writes summaries and runs."""
    if repeats < 1:
        raise ConfigError("repeats must be >= 1")
    if not specs:
        raise UsageError("compare needs at least one algorithm")
    outdir = Path(outdir)
    rows = []
    for spec in specs:
        results = []
        for i in range(repeats):
            s = dataclasses.replace(spec, seed=spec.seed + i)
            res = execute(s, sections)
            write_run(res, outdir / spec.algo / f"seed_{s.seed}")
            results.append(res)
        rows.append(ComparisonRow.from_results(spec.algo, results))
    write_summary(rows, outdir)
    return rows


def write_summary(rows: list[ComparisonRow], outdir: Path) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SUMMARY_COLUMNS)
        for r in rows:
            w.writerow(r.csv_row())
    (outdir / "summary.json").write_text(
        json.dumps([dataclasses.asdict(r) for r in rows], indent=1) + "\n")


def read_summary(path: Path) -> list[ComparisonRow]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != SUMMARY_COLUMNS:
        raise ValueError(f"unexpected summary header {rows[0]}")
    return [ComparisonRow(a, float(b), int(c), float(d), float(e), float(f), float(g))
            for a, b, c, d, e, f, g in rows[1:]]


def _weighted(result: RunResult, weights) -> Scalarizer:
    s = result.scalarizer
    if weights is None:
        return s
    if len(weights) != len(s.weights):
        raise ConfigError(f"need {len(s.weights)} weights, got {len(weights)}")
    return s.with_weights(tuple(float(w) for w in weights))


def pareto_table(result: RunResult, weights=None) -> tuple[list[str], list[EvaluationRecord],
                                                            list[float]]:
    """Archive members ordered by weighted sum under ``weights`` (best first)."""
    if len(result.objective_names) < 2:
        raise UsageError("pareto export needs a multi-objective run; this run has one objective")
    scal = _weighted(result, weights)
    scored = [(scal(r.report), r) for r in result.pareto]
    scored.sort(key=lambda t: (-scal.sense.sign * t[0], t[1].eval_index))
    header = ([f"x{i}" for i in range(result.space.dim)] + list(result.objective_names)
              + ["weighted_sum"])
    return header, [r for _, r in scored], [v for v, _ in scored]


def write_pareto(result: RunResult, path: Path, weights=None) -> list[EvaluationRecord]:
    header, members, values = pareto_table(result, weights)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r, v in zip(members, values):
            w.writerow([repr(float(x)) for x in r.point] +
                       [repr(float(x)) for x in r.report.values] + [repr(float(v))])
    return members


def read_pareto_csv(path: Path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in row] for row in rows[1:]])


def load_run(path: Path) -> RunResult:
    p = Path(path)
    if p.is_dir():
        p = p / "run.json"
    if not p.exists():
        raise UsageError(f"no run.json at {path}")
    return read_run_json(p)
