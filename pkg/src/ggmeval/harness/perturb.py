"""Perturbations that move a generated set away from the reference set.

Every function takes a degree of perturbation ``t`` in ``[0, 1]`` and a
seeded generator. Random draws are made for all graphs, nodes and edges
regardless of ``t``, so calling a function with a freshly seeded generator
of the same seed and increasing ``t`` yields nested perturbations (everything
perturbed at a small ``t`` is also perturbed at a larger one). At ``t = 0``
the input set is returned graph-for-graph unchanged.
"""

from __future__ import annotations

import math
from typing import Mapping

import numpy as np

from ..graphcore import Graph, GraphSet, er_twin
from .cluster import Clustering

MAX_REWIRE_TRIES = 100


def _check_t(t: float) -> None:
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"degree of perturbation must lie in [0, 1], got {t}")


def _count(t: float, total: int) -> int:
    # float t grids (0.1 * 10 = 1.0000000000000002 etc.) must not lose a step
    return min(total, int(math.floor(t * total + 1e-9)))


def _seeds(rng: np.random.Generator, n: int) -> np.ndarray:
    return rng.integers(0, 2**63 - 1, size=n)


def perturb_mix(graphs: GraphSet, t: float, rng: np.random.Generator) -> GraphSet:
    """Replace ``round(t * |S|)`` randomly chosen graphs by their E-R twins."""
    _check_t(t)
    n = len(graphs)
    order = rng.permutation(n)
    seeds = _seeds(rng, n)
    k = min(n, int(math.floor(t * n + 0.5 + 1e-9)))
    out = list(graphs)
    for i in order[:k]:
        out[i] = er_twin(graphs[i], np.random.default_rng(seeds[i]))
    return GraphSet(out)


def rewire_graph(g: Graph, t: float, rng: np.random.Generator) -> Graph:
    """Rewire each edge with probability ``t``, keeping one random endpoint.

    The free endpoint is redrawn uniformly over all nodes; proposals creating
    a self-loop or a duplicate edge are retried up to ``MAX_REWIRE_TRIES``
    times, after which the edge keeps its original endpoints.
    """
    m = g.num_edges
    u = rng.random(m)
    keep_second = rng.random(m) < 0.5
    chosen = np.flatnonzero(u < t)
    if len(chosen) == 0:
        return g
    slots = [tuple(e) for e in g.edges.tolist()]
    present = set(slots)
    n = g.num_nodes
    for s in chosen:
        i, j = slots[s]
        keep = j if keep_second[s] else i
        present.discard((i, j))
        new = (i, j)
        for _ in range(MAX_REWIRE_TRIES):
            w = int(rng.integers(n))
            cand = (min(keep, w), max(keep, w))
            if w != keep and cand not in present:
                new = cand
                break
        present.add(new)
        slots[s] = new
    return Graph(n, slots, g.node_features, g.edge_features, g.schema)


def perturb_rewire(graphs: GraphSet, t: float, rng: np.random.Generator) -> GraphSet:
    _check_t(t)
    seeds = _seeds(rng, len(graphs))
    return GraphSet(rewire_graph(g, t, np.random.default_rng(s)) for g, s in zip(graphs, seeds))


def _cluster_order(clustering: Clustering, rng: np.random.Generator) -> list[int]:
    ids = sorted(clustering.exemplars)
    return [ids[i] for i in rng.permutation(len(ids))]


def perturb_mode_collapse(
    graphs: GraphSet,
    clustering: Clustering,
    t: float,
    rng: np.random.Generator,
    centres: Mapping[int, Graph] | None = None,
) -> GraphSet:
    """Replace every member of the first ``floor(t K)`` shuffled clusters by its cluster centre.

    ``centres`` maps cluster id to the centre graph; by default the cluster
    exemplar from ``graphs`` is used.
    """
    _check_t(t)
    if len(clustering.assignment) != len(graphs):
        raise ValueError("clustering does not match the graph set")
    order = _cluster_order(clustering, rng)
    collapsed = set(order[: _count(t, len(order))])
    if centres is None:
        centres = {c: graphs[i] for c, i in clustering.exemplars.items()}
    return GraphSet(
        centres[c] if c in collapsed else g for g, c in zip(graphs, clustering.assignment)
    )


def perturb_mode_drop(
    graphs: GraphSet,
    clustering: Clustering,
    t: float,
    rng: np.random.Generator,
) -> GraphSet:
    """Drop the first ``floor(t (K - 1))`` shuffled clusters, refilling with duplicates.

    Each removed graph is replaced by a uniformly chosen member of the
    surviving clusters, so the set size is unchanged and one cluster always
    survives.
    """
    _check_t(t)
    if len(clustering.assignment) != len(graphs):
        raise ValueError("clustering does not match the graph set")
    order = _cluster_order(clustering, rng)
    dropped = set(order[: _count(t, len(order) - 1)])
    assignment = np.asarray(clustering.assignment)
    removed = np.flatnonzero(np.isin(assignment, list(dropped)))
    kept = np.flatnonzero(~np.isin(assignment, list(dropped)))
    picks = rng.choice(kept, size=len(removed), replace=True) if len(removed) else []
    out = list(graphs)
    for i, src in zip(removed, picks):
        out[i] = graphs[int(src)]
    return GraphSet(out)


def _resample(values: np.ndarray, cardinality: int, t: float, rng: np.random.Generator):
    u = rng.random(len(values))
    fresh = rng.integers(cardinality, size=len(values))
    hit = u < t
    if not hit.any():
        return None
    out = values.copy()
    out[hit] = fresh[hit]
    return out


def perturb_node_feats(graphs: GraphSet, t: float, rng: np.random.Generator) -> GraphSet:
    """Resample each node category uniformly with probability ``t``."""
    _check_t(t)
    if graphs.schema is None or not graphs.schema.has_node_features:
        raise ValueError("node-feature perturbation needs graphs with categorical node features")
    out = []
    for g, s in zip(graphs, _seeds(rng, len(graphs))):
        nf = _resample(g.node_features, g.schema.node_cardinality, t, np.random.default_rng(s))
        out.append(g if nf is None else g.replace(node_features=nf))
    return GraphSet(out)


def perturb_edge_feats(graphs: GraphSet, t: float, rng: np.random.Generator) -> GraphSet:
    """Resample each edge category uniformly with probability ``t``."""
    _check_t(t)
    if graphs.schema is None or not graphs.schema.has_edge_features:
        raise ValueError("edge-feature perturbation needs graphs with categorical edge features")
    out = []
    for g, s in zip(graphs, _seeds(rng, len(graphs))):
        ef = _resample(g.edge_features, g.schema.edge_cardinality, t, np.random.default_rng(s))
        out.append(g if ef is None else g.replace(edge_features=ef))
    return GraphSet(out)
