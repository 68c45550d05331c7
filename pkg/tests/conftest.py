import functools

import pytest

from heckezeta.hecke_core import make_context
from heckezeta.partition import search_discs

ACCEPTANCE_LINES: dict = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES[criterion] = f"[{'PASS' if ok else 'FAIL'}] criterion {criterion:>2}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])


@functools.lru_cache(maxsize=None)
def ctx_of(q):
    return make_context(q)


@functools.lru_cache(maxsize=None)
def discs_of(q):
    return search_discs(ctx_of(q))


@pytest.fixture
def record_criterion():
    return record
