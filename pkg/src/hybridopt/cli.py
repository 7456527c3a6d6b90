"""Command-line front end: ``bench``, ``run``, ``compare`` and ``pareto``.

Exit codes: 0 success, 2 usage or configuration error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import harness
from .benchmarks import BENCHMARKS, make_benchmark
from .core import ConfigError, UsageError

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _run_args(p: argparse.ArgumentParser, multi_algo: bool = False) -> None:
    if multi_algo:
        p.add_argument("--algo", action="append", help="algorithm id; repeat for several")
    else:
        p.add_argument("--algo", choices=harness.ALGORITHMS)
    p.add_argument("--problem", choices=sorted(BENCHMARKS))
    p.add_argument("--budget-evals", type=int)
    p.add_argument("--budget-seconds", type=float)
    p.add_argument("--batch", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--problem-seed", type=int)
    p.add_argument("--config", help="INI file with [run] and per-algorithm sections")
    p.add_argument("--start", choices=("far", "near"))
    p.add_argument("--accel", action="store_true", default=None, help="enable accelerators")
    p.add_argument("--noise", type=float)
    p.add_argument("--dim", type=int)
    p.add_argument("--out", help="output directory (default: under $%s or .)" % harness.OUTPUT_ENV)
    p.add_argument("--real-time", action="store_true", default=None,
                   help="budget seconds on the wall clock instead of the simulated block clock")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="hybridopt", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    bench = sub.add_parser("bench", help="list or describe benchmarks")
    bench.add_argument("action", choices=("list", "describe"))
    bench.add_argument("name", nargs="?")

    _run_args(sub.add_parser("run", help="one seeded run"))
    cmp_ = sub.add_parser("compare", help="seeded repeats of several algorithms")
    _run_args(cmp_, multi_algo=True)
    cmp_.add_argument("--repeats", type=int, default=6)

    par = sub.add_parser("pareto", help="export and re-rank the front of a finished run")
    par.add_argument("run_dir")
    par.add_argument("--reweigh", help="comma-separated weights, e.g. 1,0,0")
    par.add_argument("--out", help="path of pareto.csv (default: inside run_dir)")
    return parser


def _overrides(a) -> dict:
    return {"problem": a.problem, "budget_evals": a.budget_evals,
            "budget_seconds": a.budget_seconds, "batch": a.batch, "seed": a.seed,
            "problem_seed": a.problem_seed, "start": a.start, "accel": a.accel,
            "noise": a.noise, "dim": a.dim, "real_time": a.real_time}


def _default_out(*parts) -> Path:
    return harness.output_root().joinpath(*[str(p) for p in parts])


def cmd_bench(a) -> int:
    if a.action == "list":
        for name in sorted(BENCHMARKS):
            print(f"{name}\t{make_benchmark(name).description}")
        return EXIT_OK
    if a.name is None:
        raise UsageError("bench describe needs a benchmark name")
    print(json.dumps(make_benchmark(a.name).describe(), indent=1))
    return EXIT_OK


def cmd_run(a) -> int:
    sections = harness.read_config(a.config)
    spec = harness.run_spec_from(sections, algo=a.algo, **_overrides(a))
    result = harness.execute(spec, sections)
    out = Path(a.out) if a.out else _default_out("runs", spec.algo, spec.problem,
                                                  f"seed_{spec.seed}")
    harness.write_run(result, out)
    print(f"{spec.algo} on {spec.problem}: best {result.final_scalar:.6g} after "
          f"{result.total_evaluations} evaluations in {result.total_blocks} blocks "
          f"({result.termination_reason}); wrote {out}")
    return EXIT_OK


def cmd_compare(a) -> int:
    sections = harness.read_config(a.config)
    algos = a.algo or [sections.get("run", {}).get("algo")]
    if not algos or algos == [None]:
        raise UsageError("compare needs at least one --algo")
    specs = [harness.run_spec_from(sections, algo=algo, **_overrides(a)) for algo in algos]
    out = Path(a.out) if a.out else _default_out("compare", specs[0].problem)
    rows = harness.compare(specs, a.repeats, out, sections)
    print(",".join(harness.SUMMARY_COLUMNS))
    for r in rows:
        print(",".join(r.csv_row()))
    print(f"wrote {out / 'summary.csv'}")
    return EXIT_OK


def cmd_pareto(a) -> int:
    result = harness.load_run(a.run_dir)
    weights = None
    if a.reweigh:
        try:
            weights = [float(w) for w in a.reweigh.split(",")]
        except ValueError:
            raise UsageError(f"cannot parse weights {a.reweigh!r}") from None
    out = Path(a.out) if a.out else Path(a.run_dir) / "pareto.csv"
    members = harness.write_pareto(result, out, weights)
    top = members[0]
    print(f"{len(members)} front members; top point {[round(float(x), 6) for x in top.point]} "
          f"objectives {[round(float(v), 6) for v in top.report.values]}; wrote {out}")
    return EXIT_OK


COMMANDS = {"bench": cmd_bench, "run": cmd_run, "compare": cmd_compare, "pareto": cmd_pareto}


def main(argv: list[str] | None = None) -> int:
    try:
        a = build_parser().parse_args(argv)
        return COMMANDS[a.command](a)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001 - any other failure is a runtime error
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
