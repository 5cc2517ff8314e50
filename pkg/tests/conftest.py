import functools

import pytest

from tcproc import InverseSubordinatorLaw, make_stable, make_tempered_stable


@functools.lru_cache(maxsize=None)
def law_for(family, alpha, beta=None):
    f = make_stable(alpha) if family == "stable" else make_tempered_stable(alpha, beta)
    return InverseSubordinatorLaw(f)


@pytest.fixture(scope="session")
def stable_half():
    return law_for("stable", 0.5)


@pytest.fixture(scope="session")
def tempered_half():
    return law_for("tempered_stable", 0.5, 1.0)


ACCEPTANCE = {}


def record(number, title, value, tol, passed=None, detail=""):
    """Store one acceptance verdict; printed at the end of the session."""
    ok = value <= tol if passed is None else passed
    line = f"{'PASS' if ok else 'FAIL'}  criterion {number:2d}  {title}: {value:.3e} (tol {tol:.1e}){detail}"
    ACCEPTANCE[number] = line
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
