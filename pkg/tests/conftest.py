import contextlib
import time

import pytest

_RESULTS = []


class _Record:
    def __init__(self, number, title, budget):
        self.number, self.title, self.budget = number, title, budget
        self.elapsed = None
        self.runtime = None  # set when the budget applies to one evaluation, not the whole check
        self.passed = False
        self.detail = ""


@contextlib.contextmanager
def _criterion(number, title, budget):
    rec = _Record(number, title, budget)
    start = time.perf_counter()
    try:
        yield rec
        rec.elapsed = time.perf_counter() - start if rec.runtime is None else rec.runtime
        rec.passed = rec.elapsed <= budget
        if not rec.passed:
            rec.detail = f"runtime {rec.elapsed:.3g} s over budget {budget:g} s; " + rec.detail
            pytest.fail(f"criterion {number} ran {rec.elapsed:.3g} s, budget {budget:g} s")
    except BaseException as exc:
        if rec.elapsed is None:
            rec.elapsed = time.perf_counter() - start if rec.runtime is None else rec.runtime
            first = str(exc).splitlines()[0] if str(exc) else ""
            rec.detail = "; ".join(x for x in (rec.detail, f"{type(exc).__name__}: {first}") if x)
        raise
    finally:
        _RESULTS.append(rec)


@pytest.fixture
def criterion():
    """``with criterion(n, title, budget_s) as rec:`` records a PASS/FAIL line for the summary."""
    return _criterion


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for rec in sorted(_RESULTS, key=lambda r: r.number):
        status = "PASS" if rec.passed else "FAIL"
        line = f"{status} criterion {rec.number:>2}: {rec.title} ({rec.elapsed:.3g} s)"
        if rec.detail:
            line += f"  {rec.detail}"
        terminalreporter.write_line(line)
