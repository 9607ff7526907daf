from __future__ import annotations

import networkx as nx
import numpy as np
import pytest

from ggmeval.graphcore import Graph, GraphSet, generate_grid, make_dataset
from ggmeval.harness.cluster import (
    Clustering,
    affinity_propagation,
    cluster_graphs,
    wl_features,
    wl_kernel_matrix,
    wl_subtree_kernel,
)


def naive_ap(s, damping=0.5, iters=200):
    """Element-by-element responsibility/availability updates."""
    n = len(s)
    r = np.zeros((n, n))
    a = np.zeros((n, n))
    for _ in range(iters):
        r_new = np.zeros((n, n))
        for i in range(n):
            for k in range(n):
                r_new[i, k] = s[i, k] - max(a[i, kk] + s[i, kk] for kk in range(n) if kk != k)
        r = damping * r + (1 - damping) * r_new
        a_new = np.zeros((n, n))
        for i in range(n):
            for k in range(n):
                if i == k:
                    a_new[k, k] = sum(max(0, r[ii, k]) for ii in range(n) if ii != k)
                else:
                    pos = sum(max(0, r[ii, k]) for ii in range(n) if ii not in (i, k))
                    a_new[i, k] = min(0, r[k, k] + pos)
        a = damping * a + (1 - damping) * a_new
    return [k for k in range(n) if r[k, k] + a[k, k] > 0]


def blob_similarity(points):
    d = points[:, None, :] - points[None, :, :]
    return -np.sum(d * d, axis=-1)


class TestWl:
    def test_p3_vs_k3(self):
        p3 = Graph(3, [(0, 1), (1, 2)])
        k3 = Graph(3, [(0, 1), (1, 2), (0, 2)])
        # round 0: 3 * 3 uniform labels; round 1: only the P3 middle matches the K3 nodes
        assert wl_subtree_kernel(p3, k3, h=1) == 9 + 1 * 3

    def test_self_kernel(self):
        g = generate_grid(3, 4)
        phi = wl_features([g], h=3).toarray()[0]
        assert wl_subtree_kernel(g, g, h=3) == phi @ phi

    def test_isomorphic_normalized(self, rng):
        g = make_dataset("lobster", 1, rng)[0]
        h = g.permute(rng.permutation(g.num_nodes))
        assert wl_subtree_kernel(g, h, normalized=True) == pytest.approx(1.0)

    def test_kernel_matrix_psd_and_unit_diag(self, rng):
        ds = make_dataset("lobster", 10, rng)
        k = wl_kernel_matrix(list(ds))
        assert np.allclose(np.diag(k), 1.0)
        assert np.linalg.eigvalsh(k).min() > -1e-9


class TestAffinityPropagation:
    def test_hand_iterated_four_points(self):
        pts = np.array([[0.0], [0.1], [10.0], [10.3]])
        s = blob_similarity(pts)
        off = s[~np.eye(4, dtype=bool)]
        s_pref = s.copy()
        np.fill_diagonal(s_pref, np.median(off))
        expected = naive_ap(s_pref)
        cl = affinity_propagation(s)
        assert sorted(cl.exemplars.values()) == expected
        assert cl.num_clusters == 2
        assert cl.assignment[0] == cl.assignment[1] != cl.assignment[2] == cl.assignment[3]

    def test_matches_sklearn(self):
        sklearn_cluster = pytest.importorskip("sklearn.cluster")
        rng = np.random.default_rng(3)
        centres = np.array([[0, 0], [5, 5], [0, 8]])
        pts = np.vstack([c + rng.standard_normal((12, 2)) * 0.5 for c in centres])
        s = blob_similarity(pts)
        ref = sklearn_cluster.AffinityPropagation(affinity="precomputed", random_state=0).fit(s)
        ours = affinity_propagation(s)
        assert sorted(ours.exemplars.values()) == sorted(ref.cluster_centers_indices_.tolist())
        relabel = {ex: c for c, ex in ours.exemplars.items()}
        assert [relabel[ref.cluster_centers_indices_[l]] for l in ref.labels_] == list(ours.assignment)

    def test_single_point(self):
        cl = affinity_propagation(np.array([[0.0]]))
        assert cl.assignment == (0,) and cl.exemplars == {0: 0}

    def test_permutation_equivariant(self, rng):
        pts = np.vstack([rng.standard_normal((8, 2)), rng.standard_normal((8, 2)) + 6])
        s = blob_similarity(pts)
        perm = rng.permutation(len(pts))
        a = affinity_propagation(s)
        b = affinity_propagation(s[np.ix_(perm, perm)])
        # same partition after undoing the permutation
        groups_a = {frozenset(np.flatnonzero(np.array(a.assignment) == c)) for c in a.exemplars}
        groups_b = {frozenset(perm[np.flatnonzero(np.array(b.assignment) == c)]) for c in b.exemplars}
        assert groups_a == groups_b

    def test_non_square(self):
        with pytest.raises(ValueError):
            affinity_propagation(np.zeros((2, 3)))


class TestClusterGraphs:
    def test_isomorphic_set_single_cluster(self, rng):
        g = generate_grid(4, 5)
        ds = [g.permute(rng.permutation(g.num_nodes)) for _ in range(8)]
        assert cluster_graphs(ds).num_clusters == 1

    def test_separates_families(self):
        rng = np.random.default_rng(0)
        grids = list(make_dataset("grid", 20, rng))
        lobsters = list(make_dataset("lobster", 20, rng))
        cl = cluster_graphs(grids + lobsters)
        assert cl.num_clusters >= 2
        grid_clusters = set(cl.assignment[:20])
        lobster_clusters = set(cl.assignment[20:])
        assert not grid_clusters & lobster_clusters

    def test_deterministic(self):
        ds = list(make_dataset("lobster", 25, np.random.default_rng(1)))
        assert cluster_graphs(ds) == cluster_graphs(ds)

    def test_exemplars_in_own_cluster(self):
        cl = cluster_graphs(list(make_dataset("grid", 30, np.random.default_rng(2))))
        for c, i in cl.exemplars.items():
            assert cl.assignment[i] == c


class TestClusteringType:
    def test_bad_exemplar(self):
        with pytest.raises(ValueError):
            Clustering((0, 0, 1), {0: 2, 1: 2})

    def test_subset_reassigns_lost_exemplar(self):
        cl = Clustering((0, 0, 1, 1), {0: 0, 1: 3})
        sub = cl.subset([1, 2, 3])
        assert sub.assignment == (0, 1, 1)
        assert sub.exemplars == {0: 0, 1: 2}


def test_networkx_wl_hash_agrees_on_isomorphism():
    # sanity: graphs with equal WL hashes have unit normalised kernel
    a = nx.cycle_graph(6)
    b = nx.relabel_nodes(a, {i: (i * 5) % 6 for i in range(6)})
    assert nx.weisfeiler_lehman_graph_hash(a) == nx.weisfeiler_lehman_graph_hash(b)
    ga, gb = Graph(6, list(a.edges())), Graph(6, list(b.edges()))
    assert wl_subtree_kernel(ga, gb, normalized=True) == pytest.approx(1.0)
    assert isinstance(GraphSet([ga]), GraphSet)
