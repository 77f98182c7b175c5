from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logdiffusion.topology import (ConstructionError, NetworkTopology, check_combination_matrix,
                                   dumps_network, identity_weights, loads_network,
                                   metropolis_weights, random_connected_graph, ring_graph,
                                   uniform_weights)


def bfs_reach(topology):
    seen, queue = {0}, deque([0])
    while queue:
        for l in topology.neighbors[queue.popleft()]:
            if l not in seen:
                seen.add(l)
                queue.append(l)
    return seen


def test_two_node_graph():
    g = random_connected_graph(2, 1, np.random.default_rng(0))
    assert g.neighbors == ((0, 1), (0, 1))
    assert g.edges() == [(0, 1)]


def test_random_graph_deterministic():
    a = random_connected_graph(20, 4, np.random.default_rng(7))
    b = random_connected_graph(20, 4, np.random.default_rng(7))
    assert a == b


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40), st.integers(1, 8), st.integers(0, 2**32 - 1))
def test_random_graph_properties(N, d, seed):
    d = min(d, N - 1)
    g = random_connected_graph(N, d, np.random.default_rng(seed))
    assert bfs_reach(g) == set(range(N))
    for k, nbrs in enumerate(g.neighbors):
        assert k in nbrs
        assert all(k in g.neighbors[l] for l in nbrs)
        assert d - 1 <= len(nbrs) - 1 <= d + 1


@pytest.mark.parametrize("N, d", [(1, 1), (5, 0), (5, 5)])
def test_random_graph_rejects(N, d):
    with pytest.raises(ValueError):
        random_connected_graph(N, d, np.random.default_rng(0))


def test_random_graph_gives_up():
    with pytest.raises(ConstructionError):
        random_connected_graph(30, 2, np.random.default_rng(0), max_retries=0)


def test_topology_invariants_enforced():
    with pytest.raises(ValueError, match="own neighborhood"):
        NetworkTopology(((1,), (0, 1)))
    with pytest.raises(ValueError, match="asymmetric"):
        NetworkTopology(((0, 1), (1,)))
    with pytest.raises(ValueError, match="connected"):
        NetworkTopology(((0,), (1,)))


def test_uniform_weights_star():
    g = NetworkTopology.from_edges(4, [(0, 1), (0, 2), (0, 3)])
    A = uniform_weights(g)
    np.testing.assert_array_equal(A[:, 0], [0.25] * 4)
    np.testing.assert_array_equal(A[:, 1], [0.5, 0.5, 0, 0])
    np.testing.assert_allclose(A.sum(axis=0), 1.0)


def test_metropolis_two_nodes():
    A = metropolis_weights(ring_graph(2))
    np.testing.assert_array_equal(A, [[0.5, 0.5], [0.5, 0.5]])


def test_metropolis_regular_graph():
    # ring: every neighborhood has size 3, so off-diagonals are 1/3
    A = metropolis_weights(ring_graph(6))
    for k in range(6):
        assert A[(k + 1) % 6, k] == pytest.approx(1 / 3)
        assert A[(k - 1) % 6, k] == pytest.approx(1 / 3)
        assert A[k, k] == pytest.approx(1 / 3)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 50), st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_weight_matrix_invariants(N, d, seed):
    g = random_connected_graph(N, min(d, N - 1), np.random.default_rng(seed))
    for rule in (uniform_weights, metropolis_weights):
        A = rule(g)
        check_combination_matrix(A, g)
        assert np.all(A >= 0)
        assert np.max(np.abs(A.sum(axis=0) - 1)) < 1e-12
        np.testing.assert_array_equal(A != 0, g.adjacency())


def test_check_combination_matrix_rejects():
    g = ring_graph(4)
    A = uniform_weights(g)
    bad = A.copy()
    bad[2, 0] = 0.1
    with pytest.raises(ValueError):
        check_combination_matrix(bad, g)
    with pytest.raises(ValueError):
        check_combination_matrix(-A, g)


def test_identity_weights():
    np.testing.assert_array_equal(identity_weights(ring_graph(3)), np.eye(3))


def test_network_text_roundtrip(tmp_path):
    g = random_connected_graph(12, 3, np.random.default_rng(3))
    mats = {"a": metropolis_weights(g), "c": np.eye(12)}
    text = dumps_network(g, mats)
    assert text.startswith("nodes 12\n")
    g2, mats2 = loads_network(text)
    assert g2 == g
    for name in mats:
        np.testing.assert_array_equal(mats2[name], mats[name])


def test_network_text_errors():
    with pytest.raises(ValueError, match="line 2"):
        loads_network("nodes 3\nedge 0\n")
    with pytest.raises(ValueError, match="nodes"):
        loads_network("edge 0 1\n")
