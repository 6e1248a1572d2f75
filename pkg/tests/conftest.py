from pathlib import Path

import pytest

from hyperlagrange.expr import load_problem

PROBLEMS = Path(__file__).resolve().parents[1] / "problems"

ACCEPTANCE_RESULTS = []


@pytest.fixture
def problems_dir():
    return PROBLEMS


@pytest.fixture
def ellipsoid():
    return load_problem(PROBLEMS / "ellipsoid.txt")


@pytest.fixture
def two_constraints():
    return load_problem(PROBLEMS / "two_constraints.txt")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num, title, ok, detail in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(f"[{'PASS' if ok else 'FAIL'}] {num}. {title}: {detail}")
