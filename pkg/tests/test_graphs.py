from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import rumorbench as rb
from rumorbench.graphs import _check_graph


def make_rng(seed: int = 1) -> rb.RandomSource:
    return rb.RandomSource(seed)


# ---------------------------------------------------------------------------
# complete graphs
# ---------------------------------------------------------------------------

def test_complete_trivial_sizes():
    assert rb.gen_complete(1).num_edges == 0
    g = rb.gen_complete(4)
    assert g.num_edges == 6
    assert np.all(g.degrees == 3)


def test_complete_adjacency_ascending_excluding_self():
    g = rb.gen_complete(5)
    assert g.neighbors(2).tolist() == [0, 1, 3, 4]


def test_complete_large_degree():
    g = rb.gen_complete(1 << 12)
    assert np.all(g.degrees == 4095)


# ---------------------------------------------------------------------------
# hypercubes
# ---------------------------------------------------------------------------

def test_hypercube_d1():
    g = rb.gen_hypercube(1)
    assert g.n == 2 and g.num_edges == 1


def test_hypercube_d3_node0():
    g = rb.gen_hypercube(3)
    assert g.neighbors(0).tolist() == [1, 2, 4]


def test_hypercube_d12_regular():
    g = rb.gen_hypercube(12)
    assert g.n == 4096
    assert np.all(g.degrees == 12)


@given(st.integers(min_value=1, max_value=7))
def test_hypercube_neighbors_are_bit_flips(d):
    g = rb.gen_hypercube(d)
    src = np.repeat(np.arange(g.n), g.degrees)
    xor = src ^ g.adj_flat.astype(np.int64)
    assert np.all(xor > 0)
    assert np.all((xor & (xor - 1)) == 0)  # powers of two


# ---------------------------------------------------------------------------
# torus
# ---------------------------------------------------------------------------

def test_torus_degrees_and_size():
    assert np.all(rb.gen_torus(3).degrees == 8)
    assert rb.gen_torus(64).n == 1 << 12


def test_torus_wraparound_neighbor():
    g = rb.gen_torus(5)
    # node (0,0): the (-1,-1) direction wraps to (4,4) = id 24
    assert 24 in g.neighbors(0).tolist()


def test_torus_direction_order():
    g = rb.gen_torus(5)
    coords = [(int(v) // 5, int(v) % 5) for v in g.neighbors(0)]
    assert coords[:3] == [(1, 0), (1, 1), (0, 1)]


@given(st.integers(min_value=3, max_value=8), st.data())
def test_torus_translation_invariance(side, data):
    g = rb.gen_torus(side)
    a = data.draw(st.integers(min_value=0, max_value=side - 1))
    b = data.draw(st.integers(min_value=0, max_value=side - 1))
    origin = g.neighbors(0)
    shifted = [
        (((int(v) // side) + a) % side) * side + ((int(v) % side) + b) % side
        for v in origin
    ]
    assert g.neighbors(a * side + b).tolist() == shifted


# ---------------------------------------------------------------------------
# G(n, p)
# ---------------------------------------------------------------------------

def test_gnp_extremes():
    rng = make_rng()
    assert rb.gen_gnp(10, 0.0, rng.derive("a")).num_edges == 0
    full = rb.gen_gnp(10, 1.0, rng.derive("b"))
    ref = rb.gen_complete(10)
    assert np.array_equal(full.adj_flat, ref.adj_flat)
    assert np.array_equal(full.adj_ptr, ref.adj_ptr)


def test_gnp_deterministic_under_seed():
    a = rb.gen_gnp(200, 0.05, make_rng(3).derive("g"))
    b = rb.gen_gnp(200, 0.05, make_rng(3).derive("g"))
    assert np.array_equal(a.adj_flat, b.adj_flat)


def test_gnp_edge_count_matches_expectation():
    # mean edge count over k samples within 4 standard errors of p*n(n-1)/2
    n, p, k = 300, 0.05, 200
    total = n * (n - 1) // 2
    rng = make_rng(11)
    counts = [rb.gen_gnp(n, p, rng.derive("s", i)).num_edges for i in range(k)]
    se = math.sqrt(total * p * (1 - p) / k)
    assert abs(np.mean(counts) - total * p) < 4 * se


@pytest.mark.slow
def test_gnp_mean_degree_at_threshold():
    # empirical mean degree of G(2^12, ln n / n) across samples vs (n-1)p
    n = 1 << 12
    p = math.log(n) / n
    rng = make_rng(17)
    means = [
        2 * rb.gen_gnp(n, p, rng.derive("s", i)).num_edges / n for i in range(100)
    ]
    assert abs(np.mean(means) - (n - 1) * p) < 0.1


@pytest.mark.slow
def test_gnp_connectivity_fraction_at_threshold_is_nontrivial():
    # at p = ln(n)/n a sample is connected with probability strictly inside
    # (0, 1); 250 samples distinguish that from both extremes decisively
    n = 1 << 12
    p = math.log(n) / n
    rng = make_rng(23)
    flags = [rb.is_connected(rb.gen_gnp(n, p, rng.derive("c", i))) for i in range(250)]
    frac = np.mean(flags)
    assert 0.0 < frac < 1.0


# ---------------------------------------------------------------------------
# random regular
# ---------------------------------------------------------------------------

def test_regular_preconditions():
    with pytest.raises(ValueError):
        rb.gen_random_regular(5, 3, make_rng())  # odd n*d
    with pytest.raises(ValueError):
        rb.gen_random_regular(4, 4, make_rng())  # d >= n


def test_regular_n4_d3_is_complete():
    g = rb.gen_random_regular(4, 3, make_rng(2))
    assert np.array_equal(g.adj_flat, rb.gen_complete(4).adj_flat)


@given(st.integers(min_value=1, max_value=6), st.integers(min_value=0, max_value=20),
       st.integers(min_value=0, max_value=1000))
@settings(max_examples=40, deadline=None)
def test_regular_degree_spike(d, extra, seed):
    n = d + 1 + extra
    if (n * d) % 2 == 1:
        n += 1
    g = rb.gen_random_regular(n, d, make_rng(seed))
    assert np.all(g.degrees == d)


def test_regular_deterministic_under_seed():
    a = rb.gen_random_regular(50, 4, make_rng(9))
    b = rb.gen_random_regular(50, 4, make_rng(9))
    assert np.array_equal(a.adj_flat, b.adj_flat)


def test_regular_full_scale_sample():
    g = rb.gen_random_regular(4096, 12, make_rng(13))
    assert np.all(g.degrees == 12)


# ---------------------------------------------------------------------------
# structural invariants across families
# ---------------------------------------------------------------------------

spec_strategy = st.one_of(
    st.integers(min_value=1, max_value=20).map(rb.GraphSpec.complete),
    st.integers(min_value=1, max_value=6).map(rb.GraphSpec.hypercube),
    st.integers(min_value=3, max_value=8).map(rb.GraphSpec.torus),
    st.tuples(st.integers(min_value=2, max_value=40),
              st.floats(min_value=0.0, max_value=1.0)).map(lambda t: rb.GraphSpec.gnp(*t)),
    st.tuples(st.integers(min_value=1, max_value=5),
              st.integers(min_value=0, max_value=12)).map(
        lambda t: rb.GraphSpec.regular(
            t[0] + 1 + t[1] + ((t[0] + 1 + t[1]) * t[0]) % 2, t[0])),
)


@given(spec_strategy, st.integers(min_value=0, max_value=10_000))
@settings(max_examples=60, deadline=None)
def test_generated_graphs_are_simple_and_symmetric(spec, seed):
    g = spec.generate(make_rng(seed).derive("gen"))
    _check_graph(g)  # no loops, no duplicates, symmetric
    assert g.n == spec.n


# ---------------------------------------------------------------------------
# connectivity helpers
# ---------------------------------------------------------------------------

def test_is_connected_basics():
    assert rb.is_connected(rb.gen_complete(5))
    assert not rb.is_connected(rb.Graph.from_adjacency([[], []]))
    assert rb.is_connected(rb.gen_complete(1))


def test_sample_connected_deterministic_spec_first_attempt():
    g = rb.sample_connected(rb.GraphSpec.hypercube(5), make_rng(1))
    assert g.n == 32


def test_sample_connected_failure_carries_attempts():
    spec = rb.GraphSpec.gnp(4, 0.0)
    with pytest.raises(rb.GraphGenerationError) as err:
        rb.sample_connected(spec, make_rng(1), max_attempts=7)
    assert err.value.attempts == 7


def test_sample_connected_always_connected():
    spec = rb.GraphSpec.gnp(64, "lnn")
    rng = make_rng(5)
    for i in range(5):
        assert rb.is_connected(rb.sample_connected(spec, rng.derive("s", i)))


# ---------------------------------------------------------------------------
# spec parsing / canonical text
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("text", [
    "complete:4096", "hypercube:12", "torus:64",
    "gnp:4096:lnn", "gnp:4096:2lnn", "regular:4096:12",
])
def test_spec_text_roundtrip(text):
    spec = rb.parse_graph_spec(text)
    assert spec.canonical_text() == text
    assert rb.parse_graph_spec(spec.canonical_text()) == spec


def test_spec_parse_literal_p():
    spec = rb.parse_graph_spec("gnp:4096:0.002029")
    assert spec.p == pytest.approx(0.002029)


def test_spec_parse_lnn_value():
    spec = rb.parse_graph_spec("gnp:4096:lnn")
    assert spec.p == pytest.approx(math.log(4096) / 4096)


@pytest.mark.parametrize("bad", [
    "complete", "complete:0", "torus:2", "gnp:10:1.5", "regular:5:3",
    "regular:4:4", "lattice:5", "hypercube:0", "gnp:10",
])
def test_spec_parse_rejects(bad):
    with pytest.raises(ValueError):
        rb.parse_graph_spec(bad)
