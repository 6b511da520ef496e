"""Shared fixtures and the acceptance summary printed at the end of a run."""

from collections import OrderedDict

import numpy as np
import pytest

from grunwald import Stable, build_table

ACCEPTANCE = OrderedDict()


def record(criterion: int, ok: bool, detail: str):
    """Fold one check into the verdict for ``criterion`` (all checks must pass)."""
    prev_ok, prev_detail = ACCEPTANCE.get(criterion, (True, []))
    ACCEPTANCE[criterion] = (prev_ok and ok, prev_detail + [detail])


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, details = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  " + "; ".join(details))


@pytest.fixture(scope="session")
def stable():
    return Stable(1.5)


@pytest.fixture(scope="session")
def table_cache(stable):
    cache = {}

    def get(h, N, sym=None):
        sym = stable if sym is None else sym
        key = (repr(sym.describe()), float(h), int(N))
        if key not in cache:
            cache[key] = build_table(sym, h, N)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)
