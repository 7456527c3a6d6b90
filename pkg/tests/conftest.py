import numpy as np
import pytest

from hybridopt.core import Budget, Scalarizer, SearchSpace, Sense
from hybridopt.evaluator import Problem, Session

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records a pass/fail line for the summary and asserts."""

    def record(n: int, ok: bool, detail: str = "") -> None:
        prev = _CRITERIA.get(n)
        ok_all = ok and (prev is None or prev[0])
        text = detail if prev is None else f"{prev[1]}; {detail}"
        _CRITERIA[n] = (ok_all, text)
        print(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
        assert ok, f"criterion {n}: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def make_session(fn, dim=2, low=-5.0, high=5.0, batch=4, evals=200, seconds=None, m=1,
                 sense=Sense.MINIMIZE, noise=0.0, seed=0, weights=None, **kw) -> Session:
    space = SearchSpace.cube(dim, low, high)
    problem = Problem(space, m, fn, sense, noise_sigma=noise, **kw)
    scal = Scalarizer(weights or (1.0,) * m, sense)
    return Session(problem, scal, Budget(evals, seconds, batch), seed)


def sum_squares(x):
    return (float(np.sum(np.asarray(x) ** 2)),)
