from __future__ import annotations

import numpy as np
import pytest

import rumorbench as rb


@pytest.fixture
def rng():
    return rb.RandomSource(20260808)


@pytest.fixture
def star6():
    """Star with center 0 and six leaves."""
    return rb.Graph.from_adjacency([[1, 2, 3, 4, 5, 6]] + [[0]] * 6)


@pytest.fixture
def path3():
    return rb.Graph.from_adjacency([[1], [0, 2], [1]])


def to_lists(g: rb.Graph) -> list[list[int]]:
    return [list(map(int, g.neighbors(u))) for u in range(g.n)]


def assert_valid_schedule(g: rb.Graph, sched: rb.Schedule) -> None:
    """Every node's schedule must be a permutation of its adjacency."""
    for u in range(g.n):
        assert sorted(sched.entries(u).tolist()) == sorted(g.neighbors(u).tolist())


def assert_causal(g: rb.Graph, times: np.ndarray, start: int) -> None:
    for v in range(g.n):
        if v == start:
            assert times[v] == 0.0
        else:
            assert min(times[u] for u in g.neighbors(v)) < times[v]
