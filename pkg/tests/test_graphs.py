import numpy as np
import pytest

from coopincentive.graphs import (
    Graph,
    GraphError,
    GraphSpec,
    generate,
    lattice2d,
    load_edge_list,
    save_edge_list,
)


def test_lattice_is_4_regular_torus():
    g = lattice2d(10)
    assert g.n == 100
    assert g.is_regular() and g.degrees[0] == 4
    assert g.n_edges == 200
    assert g.is_connected()
    # node (0,0) wraps to (9,0) and (0,9)
    assert g.adjacency[0] == (1, 9, 10, 90)


def test_lattice_too_small():
    with pytest.raises(GraphError):
        lattice2d(2)
    with pytest.raises(GraphError):
        generate(GraphSpec(family="lattice2d", L=2))


@pytest.mark.parametrize("family", ["random_regular", "erdos_renyi", "watts_strogatz", "barabasi_albert"])
def test_random_families_connected_and_deterministic(family):
    spec = GraphSpec(family=family, n=100, seed=42)
    g1, g2 = generate(spec), generate(spec)
    assert g1 == g2
    assert g1.n == 100 and g1.is_connected()
    assert abs(g1.mean_degree - 4.0) < 0.1


def test_family_specific_structure():
    assert generate(GraphSpec(family="random_regular", n=50, k=4)).is_regular()
    er = generate(GraphSpec(family="erdos_renyi", n=100, mean_degree=4.0))
    assert er.n_edges == 200
    ba = generate(GraphSpec(family="barabasi_albert", n=100, m0=6, m=2))
    assert ba.n_edges == 6 * 5 // 2 + 2 * (100 - 6)
    ws = generate(GraphSpec(family="watts_strogatz", n=100, base_degree=4, rewire_p=0.0))
    assert ws.is_regular() and ws.degrees[0] == 4


def test_different_seeds_differ():
    a = generate(GraphSpec(family="erdos_renyi", seed=1))
    b = generate(GraphSpec(family="erdos_renyi", seed=2))
    assert a != b


@pytest.mark.parametrize(
    "spec",
    [
        GraphSpec(family="random_regular", n=11, k=3),
        GraphSpec(family="barabasi_albert", m0=2, m=3),
        GraphSpec(family="barabasi_albert", n=5, m0=6),
        GraphSpec(family="watts_strogatz", base_degree=3),
        GraphSpec(family="erdos_renyi", n=5, mean_degree=10),
        GraphSpec(family="hypercube"),
    ],
)
def test_infeasible_specs(spec):
    with pytest.raises(GraphError):
        generate(spec)


def test_unconnectable_er_gives_up():
    # 3 edges on 10 nodes can never be connected
    with pytest.raises(GraphError, match="attempts"):
        generate(GraphSpec(family="erdos_renyi", n=10, mean_degree=0.6))


def test_edge_list_round_trip():
    g = generate(GraphSpec(family="barabasi_albert", seed=3))
    text = save_edge_list(g)
    assert text.startswith("# n=100\n")
    assert load_edge_list(text) == g


def test_edge_list_isolated_tail_node_needs_header():
    g = Graph.from_edges(4, [(0, 1), (1, 2)])
    assert load_edge_list(save_edge_list(g)).n == 4
    assert load_edge_list("0 1\n1 2\n").n == 3


def test_edge_list_duplicates_collapse():
    g = load_edge_list("0 1\n1 0\n0 1\n# comment\n\n1 2\n")
    assert g.n_edges == 2


@pytest.mark.parametrize(
    "text",
    ["0 1 2\n", "0 x\n", "0 -1\n", "3 3\n", "# n=3\n0 5\n"],
)
def test_edge_list_malformed(text):
    with pytest.raises(GraphError):
        load_edge_list(text)


def test_graph_validation():
    with pytest.raises(GraphError):
        Graph(2, ((1,), ()))
    with pytest.raises(GraphError):
        Graph(2, ((0,), ()))
    with pytest.raises(GraphError):
        Graph(3, ((2, 1), (0,), (0,)))
    with pytest.raises(GraphError):
        Graph.from_edges(2, [(0, 2)])


def test_csr_matches_adjacency():
    g = lattice2d(4)
    indptr, indices = g.csr
    for i in range(g.n):
        assert tuple(indices[indptr[i]:indptr[i + 1]]) == g.adjacency[i]
    assert indptr.dtype == np.int64


def test_watts_strogatz_keeps_ring_edge_count():
    g = generate(GraphSpec(family="watts_strogatz", n=100, base_degree=4, rewire_p=0.1, seed=9))
    assert g.n_edges == 200
