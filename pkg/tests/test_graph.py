import logging

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import complete_graph, random_graph, star_graph
from gprlab.graph import (CommunitySet, Graph, GraphFormatError, VertexMap, ZeroDegreeError, bfs_distances,
                          bfs_subgraph, largest_connected_component, load_communities, load_edge_list,
                          max_seed_eccentricity, walk_step, write_communities, write_edge_list)


def test_from_edges_symmetrizes_and_dedupes():
    g = Graph.from_edges(3, [0, 1, 1, 2], [1, 0, 2, 2])
    assert g.num_edges == 3
    np.testing.assert_array_equal(g.degree, [1, 2, 2])  # self-loop counts once
    a = g.adjacency.toarray()
    assert (a == a.T).all()
    assert g.total_degree == 5


def test_from_edges_rejects_out_of_range():
    with pytest.raises(ValueError):
        Graph.from_edges(2, [0], [2])


def test_edges_roundtrip():
    g = complete_graph(5)
    u, v = g.edges()
    assert (u <= v).all() and u.size == 10
    h = Graph.from_edges(5, u, v)
    assert (h.adjacency != g.adjacency).nnz == 0


def test_load_edge_list(tmp_path):
    p = tmp_path / "g.txt"
    p.write_text("# comment\n10 20\n20 30 7\n\n10 10\n30 20\n")
    g, vmap = load_edge_list(p)
    np.testing.assert_array_equal(vmap.original, [10, 20, 30])
    assert g.n == 3 and g.num_edges == 3
    np.testing.assert_array_equal(g.degree, [2, 2, 1])


@pytest.mark.parametrize("body,where", [("1 2\n3 x\n", ":2:"), ("1\n", ":1:"), ("1 -2\n", ":1:")])
def test_load_edge_list_errors_name_the_line(tmp_path, body, where):
    p = tmp_path / "bad.txt"
    p.write_text(body)
    with pytest.raises(GraphFormatError, match=where):
        load_edge_list(p)


def test_load_edge_list_empty(tmp_path):
    p = tmp_path / "e.txt"
    p.write_text("# nothing\n")
    with pytest.raises(GraphFormatError):
        load_edge_list(p)


def test_edge_list_write_read_roundtrip(tmp_path, rs):
    g = random_graph(rs, 30, 0.2)
    vmap = VertexMap(np.arange(30) * 3 + 5)
    write_edge_list(g, tmp_path / "g.txt", vmap)
    h, hmap = load_edge_list(tmp_path / "g.txt")
    iso = np.flatnonzero(g.degree == 0)
    assert iso.size == 0
    np.testing.assert_array_equal(hmap.original, vmap.original)
    assert (h.adjacency != g.adjacency).nnz == 0


def test_communities_drop_absent_ids(tmp_path, caplog):
    p = tmp_path / "c.txt"
    p.write_text("10 20 99\n98\n30\n")
    vmap = VertexMap(np.array([10, 20, 30]))
    with caplog.at_level(logging.WARNING):
        cs = load_communities(p, vmap)
    assert len(cs) == 2
    np.testing.assert_array_equal(cs[0], [0, 1])
    assert cs.dropped_members == 2 and cs.dropped_communities == 1
    assert "no surviving members" in caplog.text
    write_communities(cs, tmp_path / "out.txt", vmap)
    assert (tmp_path / "out.txt").read_text().split("\n")[0] == "10\t20"


def test_vertex_map():
    vm = VertexMap(np.array([3, 7, 9]))
    np.testing.assert_array_equal(vm.to_dense([9, 3, 4]), [2, 0, -1])
    np.testing.assert_array_equal(vm.to_original([1, 2]), [7, 9])
    inner = VertexMap(np.array([0, 2]))
    np.testing.assert_array_equal(inner.compose(vm).original, [3, 9])
    with pytest.raises(ValueError):
        VertexMap(np.array([2, 1]))
    assert VertexMap(np.empty(0, dtype=int)).to_dense([1]).tolist() == [-1]


def test_vertex_map_csv(tmp_path):
    vm = VertexMap(np.array([4, 8, 15]))
    vm.write_csv(tmp_path / "m.csv")
    assert (tmp_path / "m.csv").read_text().splitlines()[0] == "original,dense"
    np.testing.assert_array_equal(VertexMap.read_csv(tmp_path / "m.csv").original, vm.original)


def test_community_remap():
    cs = CommunitySet([np.array([0, 1, 4]), np.array([2])])
    sub = cs.remap(VertexMap(np.array([1, 3, 4])))
    assert len(sub) == 1
    np.testing.assert_array_equal(sub[0], [0, 2])
    assert sub.dropped_members == 2 and sub.dropped_communities == 1


def test_largest_component_and_tie_rule():
    # components {0,1,2}, {3,4,5}: equal size, the one holding index 0 wins
    g = Graph.from_edges(7, [3, 4, 0, 1], [4, 5, 1, 2])
    lcc, vm = largest_connected_component(g)
    np.testing.assert_array_equal(vm.original, [0, 1, 2])
    assert lcc.num_edges == 2
    g = Graph.from_edges(6, [0, 2, 3, 4], [1, 3, 4, 5])
    lcc, vm = largest_connected_component(g)
    np.testing.assert_array_equal(vm.original, [2, 3, 4, 5])


def test_bfs():
    path = Graph.from_edges(6, [0, 1, 2, 3, 4], [1, 2, 3, 4, 5])
    np.testing.assert_array_equal(bfs_distances(path, [2]), [2, 1, 0, 1, 2, 3])
    np.testing.assert_array_equal(bfs_distances(path, [0, 5], 1), [0, 1, -1, -1, 1, 0])
    sub, vm = bfs_subgraph(path, [2], 1)
    np.testing.assert_array_equal(vm.original, [1, 2, 3])
    assert sub.num_edges == 2
    assert max_seed_eccentricity(path, [0]) == 5
    with pytest.raises(ValueError):
        max_seed_eccentricity(Graph.from_edges(3, [0], [1]), [0])


def test_walk_step_errors():
    g = Graph.from_edges(3, [0], [1])
    with pytest.raises(ZeroDegreeError):
        walk_step(g, np.array([1.0, 0, 0]))
    with pytest.raises(ValueError):
        walk_step(complete_graph(3), np.array([0.5, 0.0, 0.0]))


def test_walk_step_star():
    g = star_graph(4)
    x = walk_step(g, np.eye(5)[0])
    np.testing.assert_allclose(x, [0, .25, .25, .25, .25])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 25), st.floats(0.1, 0.9), st.integers(0, 2**32 - 1))
def test_walk_step_conserves_mass(n, p, seed):
    g = random_graph(np.random.default_rng(seed), n, p)
    x = np.random.default_rng(seed + 1).dirichlet(np.ones(n))
    y = walk_step(g, x)
    assert abs(y.sum() - 1) < 1e-12 and (y >= 0).all()


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 20), st.integers(0, 2**32 - 1))
def test_permuted_preserves_structure(n, seed):
    rs = np.random.default_rng(seed)
    g = random_graph(rs, n, 0.3)
    perm = rs.permutation(n)
    h = g.permuted(perm)
    np.testing.assert_array_equal(h.degree[perm], g.degree)
    assert h.num_edges == g.num_edges
