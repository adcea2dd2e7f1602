"""Shared fixtures and the per-criterion summary printed after the acceptance suite."""
from __future__ import annotations

import numpy as np
import pytest

from maimkit import games

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): acceptance criterion number n")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    n, title = mark.args
    entry = _CRITERIA.setdefault(n, {"title": title, "ok": True, "ran": False})
    if rep.when == "call" or rep.failed:
        entry["ran"] = True
        entry["ok"] &= rep.passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        status = "PASS" if e["ok"] and e["ran"] else ("FAIL" if e["ran"] else "NOT RUN")
        terminalreporter.write_line(f"criterion {n:2d}: {status}  {e['title']}")


@pytest.fixture
def rng():
    return np.random.default_rng(20240229)


@pytest.fixture
def taxi():
    return games.taxi()


@pytest.fixture
def cyber():
    return games.cyber_war()


@pytest.fixture
def jobs():
    return games.job_hiring()


@pytest.fixture
def seven():
    return games.extra_subgames()
