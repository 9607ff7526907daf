from __future__ import annotations

import itertools
import json

import networkx as nx
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from ggmeval.graphcore import (
    FeatureSchema,
    Graph,
    GraphFormatError,
    GraphSet,
    SchemaError,
    degree_augment,
    er_twin,
    generate_community,
    generate_er,
    generate_grid,
    generate_lobster,
    grid_dataset,
    labeled_community_dataset,
    load_graphset,
    lobster_dataset,
    make_dataset,
    save_graphset,
)


def to_nx(g: Graph) -> nx.Graph:
    h = nx.Graph()
    h.add_nodes_from(range(g.num_nodes))
    h.add_edges_from(map(tuple, g.edges.tolist()))
    return h


# ---------------------------------------------------------------------------
# Graph model
# ---------------------------------------------------------------------------

class TestGraph:
    def test_edges_are_canonical(self):
        g = Graph(4, [(3, 1), (0, 2), (1, 0)])
        assert g.edges.tolist() == [[0, 1], [0, 2], [1, 3]]
        assert g.num_edges == 3

    @pytest.mark.parametrize(
        "edges",
        [[(0, 0)], [(0, 4)], [(0, 1), (1, 0)], [(-1, 2)]],
        ids=["self-loop", "out-of-range", "duplicate", "negative"],
    )
    def test_invalid_edges_rejected(self, edges):
        with pytest.raises(ValueError):
            Graph(4, edges)

    def test_node_features_validated(self):
        with pytest.raises(ValueError):
            Graph(2, [(0, 1)], node_features=[0, 3], schema=FeatureSchema(3, 0))
        with pytest.raises(ValueError):
            Graph(2, [(0, 1)], node_features=[0])

    def test_edge_feature_map_must_cover_edges(self):
        with pytest.raises(ValueError):
            Graph(3, [(0, 1), (1, 2)], edge_features={(0, 1): 0}, schema=FeatureSchema(0, 2))

    def test_edge_feature_map_orientation_is_irrelevant(self):
        g = Graph(3, [(0, 1), (1, 2)], edge_features={(1, 0): 1, (2, 1): 0}, schema=FeatureSchema(0, 2))
        assert g.edge_feature_map() == {(0, 1): 1, (1, 2): 0}

    def test_schema_inferred(self):
        g = Graph(3, [(0, 1)], node_features=[0, 2, 1], edge_features=[1])
        assert g.schema == FeatureSchema(3, 2)

    def test_immutable_arrays(self):
        g = Graph(3, [(0, 1)])
        with pytest.raises(ValueError):
            g.edges[0, 0] = 2

    def test_equality_and_hash(self):
        a = Graph(3, [(0, 1), (1, 2)])
        b = Graph(3, [(2, 1), (1, 0)])
        assert a == b and hash(a) == hash(b) and a.fingerprint() == b.fingerprint()
        assert a != Graph(3, [(0, 1)])

    def test_permute_preserves_structure(self, rng):
        g = Graph(5, [(0, 1), (1, 2), (2, 3)], node_features=[0, 1, 2, 0, 1], edge_features=[0, 1, 0])
        perm = rng.permutation(5)
        h = g.permute(perm)
        assert nx.is_isomorphic(to_nx(g), to_nx(h))
        for (i, j), c in g.edge_feature_map().items():
            key = tuple(sorted((int(perm[i]), int(perm[j]))))
            assert h.edge_feature_map()[key] == c
        for v in range(5):
            assert h.node_features[perm[v]] == g.node_features[v]

    def test_graphset_rejects_mixed_schema(self):
        with pytest.raises(SchemaError):
            GraphSet([Graph(2, [(0, 1)]), Graph(2, [(0, 1)], node_features=[0, 1])])

    def test_empty_graphset_has_no_schema(self):
        assert GraphSet().schema is None


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("rows,cols,nodes,edges", [(2, 2, 4, 4), (10, 10, 100, 180), (20, 20, 400, 760), (1, 1, 1, 0)])
def test_grid_sizes(rows, cols, nodes, edges):
    g = generate_grid(rows, cols)
    assert (g.num_nodes, g.num_edges) == (nodes, edges)
    assert nx.is_isomorphic(to_nx(g), nx.grid_2d_graph(rows, cols))


def test_grid_dataset_size_range():
    ds = grid_dataset(100, np.random.default_rng(0))
    assert len(ds) == 100
    assert all(100 <= g.num_nodes <= 400 for g in ds)
    assert all(nx.is_connected(to_nx(g)) for g in ds)


def test_lobster_without_legs_is_a_path():
    g = generate_lobster(10, 0.0, 0.0, np.random.default_rng(3))
    assert nx.is_isomorphic(to_nx(g), nx.path_graph(g.num_nodes))


def _within_two_hops_of_some_path(h: nx.Graph) -> bool:
    # every path of a tree joins two nodes; try them all as backbone candidates
    for a, b in itertools.combinations_with_replacement(h.nodes, 2):
        path = nx.shortest_path(h, a, b)
        dist = nx.multi_source_dijkstra_path_length(h, set(path))
        if max(dist.values()) <= 2:
            return True
    return False


def test_lobster_is_tree_within_two_hops_of_backbone():
    rng = np.random.default_rng(11)
    checked = 0
    for _ in range(400):
        g = generate_lobster(5, 0.7, 0.7, rng)
        h = to_nx(g)
        assert g.num_edges == g.num_nodes - 1
        assert nx.is_tree(h)
        if g.num_nodes <= 15:
            assert _within_two_hops_of_some_path(h)
            checked += 1
    assert checked > 50


def test_lobster_dataset_size_range():
    ds = lobster_dataset(60, np.random.default_rng(1))
    assert all(10 <= g.num_nodes <= 100 and nx.is_connected(to_nx(g)) for g in ds)


def test_community_inter_edges():
    g = generate_community(60, np.random.default_rng(0))
    half = 30
    inter = sum(1 for i, j in g.edges.tolist() if (i < half) != (j < half))
    assert inter == 3


def test_community_rejects_odd():
    with pytest.raises(ValueError):
        generate_community(61, np.random.default_rng(0))


def test_community_tiny_blocks():
    for seed in range(20):
        g = generate_community(4, np.random.default_rng(seed))
        intra = [(i, j) for i, j in g.edges.tolist() if (i < 2) == (j < 2)]
        assert set(intra) <= {(0, 1), (2, 3)}


def test_community_intra_edge_mean():
    rng = np.random.default_rng(2024)
    counts = [generate_community(100, rng).num_edges - 5 for _ in range(1000)]
    n_pairs = 2 * 50 * 49 // 2
    se = np.sqrt(n_pairs * 0.3 * 0.7 / 1000)
    assert abs(np.mean(counts) - 735.0) <= 3 * se


def test_er_extremes():
    assert generate_er(10, 0.0, np.random.default_rng(0)).num_edges == 0
    assert generate_er(5, 1.0, np.random.default_rng(0)).num_edges == 10
    assert generate_er(0, 0.5, np.random.default_rng(0)).num_nodes == 0


def test_er_edge_count_mean():
    rng = np.random.default_rng(7)
    counts = [generate_er(50, 0.1, rng).num_edges for _ in range(1000)]
    se = np.sqrt(1225 * 0.1 * 0.9 / 1000)
    assert abs(np.mean(counts) - 122.5) <= 3 * se


def test_er_pairs_uniform():
    # every pair should be hit with the same frequency
    rng = np.random.default_rng(5)
    hits = np.zeros((6, 6))
    trials = 4000
    for _ in range(trials):
        for i, j in generate_er(6, 0.3, rng).edges.tolist():
            hits[i, j] += 1
    freq = hits[np.triu_indices(6, 1)] / trials
    se = np.sqrt(0.3 * 0.7 / trials)
    assert np.all(np.abs(freq - 0.3) <= 4 * se)


def test_er_twin_probability():
    # a dense twin reveals p through its mean edge count
    g = generate_grid(10, 10)
    rng = np.random.default_rng(0)
    counts = [er_twin(g, rng).num_edges for _ in range(400)]
    p = 180 / 100**2
    assert p == pytest.approx(0.018)
    pairs = 100 * 99 / 2
    se = np.sqrt(pairs * p * (1 - p) / 400)
    assert abs(np.mean(counts) - pairs * p) <= 3 * se


def test_er_twin_k5_and_edgeless():
    k5 = Graph(5, list(itertools.combinations(range(5), 2)))
    rng = np.random.default_rng(1)
    counts = [er_twin(k5, rng).num_edges for _ in range(4000)]
    assert abs(np.mean(counts) - 10 * 0.4) <= 3 * np.sqrt(10 * 0.4 * 0.6 / 4000)
    assert er_twin(Graph(7), rng).num_edges == 0
    assert er_twin(Graph(7), rng).num_nodes == 7


def test_generators_reproducible():
    for family in ("grid", "lobster", "community", "community_labeled", "er"):
        a = make_dataset(family, 5, np.random.default_rng(9))
        b = make_dataset(family, 5, np.random.default_rng(9))
        assert a == b


def test_unknown_family():
    with pytest.raises(ValueError):
        make_dataset("ego", 3)


def test_labeled_community_schema():
    ds = labeled_community_dataset(10, np.random.default_rng(0))
    assert ds.schema == FeatureSchema(4, 3)
    assert all(10 <= g.num_nodes <= 50 for g in ds)


# ---------------------------------------------------------------------------
# degree features
# ---------------------------------------------------------------------------

def test_degree_augment_cycle_and_star():
    c4 = Graph(4, [(0, 1), (1, 2), (2, 3), (0, 3)])
    assert degree_augment(c4).ravel().tolist() == [2, 2, 2, 2]
    star = Graph(5, [(0, 1), (0, 2), (0, 3), (0, 4)])
    assert degree_augment(star).ravel().tolist() == [4, 1, 1, 1, 1]


def test_degree_augment_labeled():
    edges = [(0, i) for i in range(1, 6)]
    g = Graph(6, edges, node_features=[2, 0, 0, 1, 0, 0], schema=FeatureSchema(3, 0))
    assert degree_augment(g)[0].tolist() == [0, 0, 1, 5]


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def test_round_trip(tmp_path):
    graphs = GraphSet(
        [
            Graph(3, [(0, 1)], node_features=[0, 1, 2], edge_features=[1], schema=FeatureSchema(3, 2)),
            Graph(1, [], node_features=[2], edge_features=[], schema=FeatureSchema(3, 2)),
            Graph(4, [(0, 3), (1, 2)], node_features=[0, 0, 0, 0], edge_features=[0, 1], schema=FeatureSchema(3, 2)),
        ]
    )
    path = tmp_path / "set.jsonl"
    save_graphset(graphs, path)
    back = load_graphset(path)
    assert back == graphs
    assert back.schema == FeatureSchema(3, 2)
    assert [g.edge_feature_map() for g in back] == [g.edge_feature_map() for g in graphs]


@given(
    st.lists(
        st.integers(1, 9).flatmap(
            lambda n: st.tuples(
                st.just(n),
                st.sets(st.tuples(st.integers(0, n - 1), st.integers(0, n - 1)).filter(lambda e: e[0] < e[1])),
            )
        ),
        max_size=6,
    )
)
def test_round_trip_property(tmp_path_factory, specs):
    graphs = GraphSet(Graph(n, sorted(edges)) for n, edges in specs)
    path = tmp_path_factory.mktemp("rt") / "set.jsonl"
    save_graphset(graphs, path)
    assert load_graphset(path) == graphs


def test_empty_file(tmp_path):
    path = tmp_path / "empty.jsonl"
    path.write_text("")
    ds = load_graphset(path)
    assert len(ds) == 0 and ds.schema is None


def test_zero_node_graph_loads(tmp_path):
    path = tmp_path / "z.jsonl"
    path.write_text('{"n":0,"edges":[]}\n')
    assert load_graphset(path)[0].num_nodes == 0


def test_bad_edge_reports_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"n":3,"edges":[[0,1]]}\n{"n":3,"edges":[[0,5]]}\n')
    with pytest.raises(GraphFormatError) as info:
        load_graphset(path)
    assert info.value.lineno == 2


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "bad.jsonl"
    path.write_text('{"n":3,"edges":[]}\n\n{"n":3,"edges":[[0,1]\n')
    with pytest.raises(GraphFormatError) as info:
        load_graphset(path)
    assert info.value.lineno == 3


def test_schema_conflict(tmp_path):
    path = tmp_path / "mixed.jsonl"
    lines = [{"n": 2, "edges": [[0, 1]]}, {"n": 2, "edges": [[0, 1]], "node_feats": [0, 1]}]
    path.write_text("\n".join(json.dumps(r) for r in lines) + "\n")
    with pytest.raises(SchemaError):
        load_graphset(path)
