import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from corrclust import _fallback
from corrclust.graph import SignedGraph

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@st.composite
def graphs(draw, min_n=0, max_n=12):
    n = draw(st.integers(min_n, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    return SignedGraph.from_edges(n, [p for p, keep in zip(pairs, mask) if keep])


@st.composite
def graph_and_perm(draw, min_n=1, max_n=12):
    from corrclust.pivot import Permutation

    g = draw(graphs(min_n, max_n))
    order = draw(st.permutations(range(g.n)))
    return g, Permutation.from_order(np.array(order, dtype=np.int64))


def path3():
    return SignedGraph.from_edges(3, [(0, 1), (1, 2)])


def cycle4():
    return SignedGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)])


def backends():
    out = [pytest.param(_fallback, id="python")]
    try:
        from corrclust import _core
    except ImportError:
        pass
    else:
        out.append(pytest.param(_core, id="compiled"))
    return out


# Acceptance verdicts, printed once at the end of the session.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
