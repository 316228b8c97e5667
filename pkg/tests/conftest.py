import numpy as np
import pytest

from gprlab.graph import Graph

# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE_LINES: dict[str, str] = {}


def report(criterion: str, passed: bool | None, detail: str) -> None:
    """``passed=None`` marks a skipped optional criterion."""
    status = "SKIP" if passed is None else "PASS" if passed else "FAIL"
    ACCEPTANCE_LINES[criterion] = f"{status} {criterion}: {detail}"


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for key in sorted(ACCEPTANCE_LINES, key=lambda s: (int(s.split()[1]), s)):
            terminalreporter.write_line(ACCEPTANCE_LINES[key])


def complete_graph(n: int) -> Graph:
    iu = np.triu_indices(n, 1)
    return Graph.from_edges(n, iu[0], iu[1])


def star_graph(leaves: int) -> Graph:
    return Graph.from_edges(leaves + 1, np.zeros(leaves, dtype=int), np.arange(1, leaves + 1))


def random_graph(rs: np.random.Generator, n: int, p: float, loops: bool = True) -> Graph:
    iu = np.triu_indices(n, 1)
    m = rs.random(iu[0].size) < p
    u, v = iu[0][m], iu[1][m]
    if loops:
        u, v = np.r_[u, np.arange(n)], np.r_[v, np.arange(n)]
    return Graph.from_edges(n, u, v)


@pytest.fixture
def rs():
    return np.random.default_rng(12345)
