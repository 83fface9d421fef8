import sys

import numpy as np
import pytest

from heatdist.graph import build_graph, figure1_graph


@pytest.fixture
def fig1():
    return figure1_graph()


def random_graph(rng, n=None, max_n=30, density=None, w_range=(0.1, 3.0)):
    """Random weighted graph; may be disconnected or edgeless."""
    if n is None:
        n = int(rng.integers(2, max_n + 1))
    if density is None:
        density = rng.uniform(0.05, 0.6)
    iu, ju = np.triu_indices(n, k=1)
    keep = rng.random(iu.size) < density
    w = rng.uniform(*w_range, size=int(keep.sum()))
    return build_graph(n, zip(iu[keep].tolist(), ju[keep].tolist(), w.tolist()))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
