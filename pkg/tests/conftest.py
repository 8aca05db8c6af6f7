import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from qagnn.graph import FlowGraph, hop_operators  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def toy_graph():
    """Four nodes, a triangle plus a pendant, mixed labels."""
    X = np.array([[0.1, 0.8, 0.3, 0.5],
                  [0.7, 0.2, 0.9, 0.4],
                  [0.3, 0.6, 0.2, 0.9],
                  [0.9, 0.1, 0.5, 0.2]])
    A = np.array([[0, 1, 1, 0],
                  [1, 0, 1, 0],
                  [1, 1, 0, 1],
                  [0, 0, 1, 0]])
    g = FlowGraph(X, np.array([0, 1, 1, 0]), A, ["a", "b", "c", "d"])
    return g, hop_operators(g)


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        rep.user_properties.append(("criterion", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    rows = {}
    for outcome in ("passed", "failed", "skipped", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            name = dict(getattr(rep, "user_properties", [])).get("criterion")
            if name is None:
                continue
            if outcome in ("failed", "error") or rep.outcome == "failed":
                rows[name] = "FAIL"
            elif outcome == "skipped":
                rows.setdefault(name, "SKIP")
            elif rep.when == "call":
                rows.setdefault(name, "PASS")
    if rows:
        terminalreporter.section("acceptance criteria")
        for name in sorted(rows):
            terminalreporter.line(f"{rows[name]}  {name}")
