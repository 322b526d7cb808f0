import itertools

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import path, random_graph, star
from netdiscover.errors import DomainError, ParseError
from netdiscover.graph import (
    Graph,
    betweenness_centrality,
    degree_centrality,
    initial_observation,
    parse_edge_list,
    read_edge_list,
    reveal_neighbors,
    serialize_edge_list,
    write_edge_list,
)


@st.composite
def graphs(draw, max_n=12):
    n = draw(st.integers(1, max_n))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph(n, chosen)


def test_edges_are_canonical():
    g = Graph(4, [(1, 0), (0, 1), (2, 2), (3, 1)])
    assert g.edges.tolist() == [[0, 1], [1, 3]]
    assert g.degrees.tolist() == [1, 2, 0, 1]
    assert g.has_edge(3, 1) and not g.has_edge(0, 2)


def test_out_of_range_edge_rejected():
    with pytest.raises(DomainError):
        Graph(2, [(0, 2)])


def test_parse_labels_and_comments():
    g = parse_edge_list("# header\nalice bob\nbob carol\n\ncarol alice\n")
    assert g.node_count == 3 and g.num_edges == 3
    assert g.label(g.node_of("carol")) == "carol"


def test_parse_reports_line_number():
    with pytest.raises(ParseError) as err:
        parse_edge_list("a b\na b c\n")
    assert err.value.line == 2


def test_isolated_nodes_survive_round_trip(tmp_path):
    g = Graph(3, [(0, 1)], labels=["x", "y", "z"])
    path_ = tmp_path / "g.edges"
    write_edge_list(g, path_)
    back = read_edge_list(path_)
    assert back.node_count == 3 and back.num_edges == 1


@given(graphs())
@settings(max_examples=50, deadline=None)
def test_serialize_round_trip(g):
    back = parse_edge_list(serialize_edge_list(g))
    assert back.node_count == g.node_count
    edges = {frozenset((back.label(u), back.label(v))) for u, v in back.edges}
    assert edges == {frozenset((g.label(u), g.label(v))) for u, v in g.edges}


def test_initial_observation_keeps_only_seed_edges():
    hidden = Graph(5, [(0, 1), (1, 2), (2, 3), (0, 4), (1, 4)])
    g0 = initial_observation(hidden, [0])
    assert g0.hidden_ids().tolist() == [0, 1, 4]
    assert {tuple(e) for e in g0.hidden_edges().tolist()} == {(0, 1), (0, 4)}


def test_reveal_adds_neighbourhood_and_incident_edges():
    hidden = Graph(5, [(0, 1), (1, 2), (2, 3), (0, 4), (1, 4)])
    g1 = reveal_neighbors(hidden, initial_observation(hidden, [0]), 1)
    assert g1.hidden_ids().tolist() == [0, 1, 2, 4]
    assert {tuple(e) for e in g1.hidden_edges().tolist()} == {(0, 1), (0, 4), (1, 2), (1, 4)}


def test_reveal_requires_observed_node():
    hidden = path(4)
    with pytest.raises(DomainError):
        reveal_neighbors(hidden, initial_observation(hidden, [0]), 3)


@given(graphs(), st.data())
@settings(max_examples=60, deadline=None)
def test_observed_graph_is_subgraph_of_hidden(hidden, data):
    seeds = data.draw(st.lists(st.integers(0, hidden.node_count - 1), min_size=1, max_size=3, unique=True))
    obs = initial_observation(hidden, seeds)
    for _ in range(data.draw(st.integers(0, 4))):
        options = obs.hidden_ids().tolist()
        obs = reveal_neighbors(hidden, obs, data.draw(st.sampled_from(options)))
    for u, v in obs.hidden_edges():
        assert hidden.has_edge(int(u), int(v))
    for u in seeds:
        assert obs.contains(u)


def test_relabel_preserves_structure(rng):
    g = random_graph(rng, 9, 0.4)
    perm = rng.permutation(9)
    h = g.relabeled(perm)
    assert h.num_edges == g.num_edges
    for u, v in g.edges:
        assert h.has_edge(perm[u], perm[v])


def _brute_betweenness(g: Graph) -> np.ndarray:
    """Fraction of each pair's shortest paths through every node, by explicit enumeration."""
    nxg = nx.Graph(list(map(tuple, g.edges.tolist())))
    nxg.add_nodes_from(range(g.node_count))
    out = np.zeros(g.node_count)
    for s, t in itertools.combinations(range(g.node_count), 2):
        if not nx.has_path(nxg, s, t):
            continue
        paths = list(nx.all_shortest_paths(nxg, s, t))
        for p in paths:
            for v in p[1:-1]:
                out[v] += 1.0 / len(paths)
    return out


@pytest.mark.parametrize("seed", range(5))
def test_betweenness_matches_path_enumeration(seed, backend):
    g = random_graph(np.random.default_rng(seed), 10, 0.3)
    assert np.allclose(betweenness_centrality(g), _brute_betweenness(g))


def test_betweenness_matches_networkx(rng, backend):
    g = random_graph(rng, 30, 0.15)
    nxg = nx.Graph(list(map(tuple, g.edges.tolist())))
    nxg.add_nodes_from(range(g.node_count))
    ref = nx.betweenness_centrality(nxg, normalized=False)
    assert np.allclose(betweenness_centrality(g), [ref[i] for i in range(g.node_count)])


def test_star_and_path_centralities(backend):
    assert betweenness_centrality(star(4))[0] == pytest.approx(6.0)
    assert betweenness_centrality(path(3)).tolist() == [0.0, 1.0, 0.0]
    assert degree_centrality(star(4)).tolist() == [1.0, 0.25, 0.25, 0.25, 0.25]


def test_degree_centrality_needs_two_nodes():
    with pytest.raises(DomainError):
        degree_centrality(Graph(1))
