import numpy as np
import pytest

from ssecut import graph_core as gc


@pytest.fixture
def k4():
    return gc.normalize_regular(gc.complete_graph(4))


@pytest.fixture
def c4():
    return gc.normalize_regular(gc.cycle_graph(4))


def two_triangles(bridge: float | None = None) -> gc.Graph:
    edges = [(0, 1, 1), (1, 2, 1), (0, 2, 1), (3, 4, 1), (4, 5, 1), (3, 5, 1)]
    if bridge:
        edges.append((2, 3, bridge))
    return gc.from_edges(6, edges)


def rng(seed=0):
    return np.random.default_rng(seed)
