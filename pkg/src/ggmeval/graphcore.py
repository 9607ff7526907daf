"""Graph data model, synthetic dataset generators and graph-set file I/O.

Graphs are simple and undirected. Edges are stored once per unordered pair as
a sorted ``(m, 2)`` integer array with ``i < j`` in every row, so two graphs
with the same edge set compare equal regardless of the order edges were given
in. Categorical node/edge features are optional and described by a shared
:class:`FeatureSchema`.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np
from scipy import sparse


class GraphFormatError(ValueError):
    """A graph-set file line could not be parsed."""

    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


class SchemaError(ValueError):
    """Graphs in one set disagree on their feature schema."""


@dataclass(frozen=True)
class FeatureSchema:
    """Category counts for node features (``b``) and edge features (``a``).

    A cardinality of 0 means the graphs carry no such feature.
    """

    node_cardinality: int = 0
    edge_cardinality: int = 0

    def __post_init__(self):
        if self.node_cardinality < 0 or self.edge_cardinality < 0:
            raise ValueError("feature cardinalities must be non-negative")

    @property
    def has_node_features(self) -> bool:
        return self.node_cardinality > 0

    @property
    def has_edge_features(self) -> bool:
        return self.edge_cardinality > 0


def _as_rng(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


class Graph:
    """Immutable simple undirected graph with optional categorical features.

    ``edge_features`` may be a mapping ``{(i, j): category}`` or a sequence
    aligned with ``edges``. After construction ``edge_features`` is an array
    aligned with the canonical (sorted) ``edges`` array.
    """

    __slots__ = ("num_nodes", "edges", "node_features", "edge_features", "schema", "_fingerprint")

    def __init__(
        self,
        num_nodes: int,
        edges: Iterable[Sequence[int]] | np.ndarray = (),
        node_features: Sequence[int] | np.ndarray | None = None,
        edge_features: Mapping[tuple[int, int], int] | Sequence[int] | np.ndarray | None = None,
        schema: FeatureSchema | None = None,
    ):
        n = int(num_nodes)
        if n < 0:
            raise ValueError("num_nodes must be non-negative")
        if edges is None:
            edges = ()
        elif not isinstance(edges, np.ndarray):
            edges = list(edges)

        if isinstance(edge_features, Mapping):
            pairs = list(edge_features.keys())
            if len(edges) and len(edges) != len(pairs):
                raise ValueError("edge feature map must cover exactly the edge set")
            if len(edges):
                given = {(min(int(i), int(j)), max(int(i), int(j))) for i, j in edges}
                keys = {(min(i, j), max(i, j)) for i, j in pairs}
                if given != keys:
                    raise ValueError("edge feature map domain differs from the edge set")
            e = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
            ef = np.asarray([edge_features[p] for p in pairs], dtype=np.int64)
        else:
            e = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
            ef = None if edge_features is None else np.asarray(edge_features, dtype=np.int64).ravel()
            if ef is not None and len(ef) != len(e):
                raise ValueError("edge_features length must equal the number of edges")

        if len(e):
            if e.min() < 0 or e.max() >= n:
                raise ValueError(f"edge endpoint out of range for graph with {n} nodes")
            if np.any(e[:, 0] == e[:, 1]):
                raise ValueError("self-loops are not allowed")
            e = np.sort(e, axis=1)
            order = np.lexsort((e[:, 1], e[:, 0]))
            e = e[order]
            if ef is not None:
                ef = ef[order]
            if np.any(np.all(e[1:] == e[:-1], axis=1)):
                raise ValueError("duplicate edges are not allowed")

        nf = None
        if node_features is not None:
            nf = np.asarray(node_features, dtype=np.int64).ravel()
            if len(nf) != n:
                raise ValueError("node_features length must equal num_nodes")

        if schema is None:
            schema = FeatureSchema(
                int(nf.max()) + 1 if nf is not None and len(nf) else 0,
                int(ef.max()) + 1 if ef is not None and len(ef) else 0,
            )
        if nf is not None:
            if not schema.has_node_features:
                raise ValueError("node features given but schema has no node categories")
            if len(nf) and (nf.min() < 0 or nf.max() >= schema.node_cardinality):
                raise ValueError("node feature category out of range")
        if ef is not None:
            if not schema.has_edge_features:
                raise ValueError("edge features given but schema has no edge categories")
            if len(ef) and (ef.min() < 0 or ef.max() >= schema.edge_cardinality):
                raise ValueError("edge feature category out of range")

        self.num_nodes = n
        self.edges = _readonly(np.ascontiguousarray(e))
        self.node_features = None if nf is None else _readonly(nf)
        self.edge_features = None if ef is None else _readonly(ef)
        self.schema = schema
        self._fingerprint = None

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def degrees(self) -> np.ndarray:
        return np.bincount(self.edges.ravel(), minlength=self.num_nodes)

    def adjacency(self) -> sparse.csr_matrix:
        """Symmetric 0/1 adjacency matrix in CSR form."""
        n = self.num_nodes
        e = self.edges
        rows = np.concatenate([e[:, 0], e[:, 1]])
        cols = np.concatenate([e[:, 1], e[:, 0]])
        data = np.ones(len(rows), dtype=np.float64)
        return sparse.csr_matrix((data, (rows, cols)), shape=(n, n))

    def neighbor_sets(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.num_nodes)]
        for i, j in self.edges.tolist():
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def edge_feature_map(self) -> dict[tuple[int, int], int] | None:
        if self.edge_features is None:
            return None
        return {(i, j): c for (i, j), c in zip(self.edges.tolist(), self.edge_features.tolist())}

    def permute(self, perm: Sequence[int]) -> "Graph":
        """Relabel node ``v`` as ``perm[v]``."""
        perm = np.asarray(perm, dtype=np.int64)
        if sorted(perm.tolist()) != list(range(self.num_nodes)):
            raise ValueError("perm must be a permutation of range(num_nodes)")
        nf = None
        if self.node_features is not None:
            nf = np.empty_like(self.node_features)
            nf[perm] = self.node_features
        return Graph(self.num_nodes, perm[self.edges], nf, self.edge_features, self.schema)

    def replace(self, **changes) -> "Graph":
        fields = dict(
            num_nodes=self.num_nodes,
            edges=self.edges,
            node_features=self.node_features,
            edge_features=self.edge_features,
            schema=self.schema,
        )
        fields.update(changes)
        return Graph(**fields)

    def fingerprint(self) -> str:
        """Content hash; equal graphs (same labelling) share a fingerprint."""
        if self._fingerprint is None:
            h = hashlib.sha1()
            h.update(np.int64(self.num_nodes).tobytes())
            h.update(np.int64(self.schema.node_cardinality).tobytes())
            h.update(np.int64(self.schema.edge_cardinality).tobytes())
            h.update(self.edges.tobytes())
            for arr in (self.node_features, self.edge_features):
                h.update(b"|" if arr is None else arr.tobytes() + b";")
            self._fingerprint = h.hexdigest()
        return self._fingerprint

    def __eq__(self, other) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        if self is other:
            return True
        if self.num_nodes != other.num_nodes or self.schema != other.schema:
            return False
        if not np.array_equal(self.edges, other.edges):
            return False
        for a, b in ((self.node_features, other.node_features), (self.edge_features, other.edge_features)):
            if (a is None) != (b is None) or (a is not None and not np.array_equal(a, b)):
                return False
        return True

    def __hash__(self) -> int:
        return hash(self.fingerprint())

    def __repr__(self) -> str:
        extra = ""
        if self.node_features is not None or self.edge_features is not None:
            extra = f", schema=({self.schema.node_cardinality}, {self.schema.edge_cardinality})"
        return f"Graph(n={self.num_nodes}, m={self.num_edges}{extra})"


class GraphSet(Sequence[Graph]):
    """Ordered, immutable collection of graphs sharing one feature schema.

    ``schema`` is ``None`` only for the empty set.
    """

    __slots__ = ("graphs", "schema")

    def __init__(self, graphs: Iterable[Graph] = ()):
        gs = tuple(graphs)
        schema = gs[0].schema if gs else None
        for idx, g in enumerate(gs):
            if not isinstance(g, Graph):
                raise TypeError(f"item {idx} is not a Graph")
            if g.schema != schema:
                raise SchemaError(f"graph {idx} has schema {g.schema}, expected {schema}")
        self.graphs = gs
        self.schema = schema

    def __len__(self) -> int:
        return len(self.graphs)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return GraphSet(self.graphs[idx])
        return self.graphs[idx]

    def __iter__(self) -> Iterator[Graph]:
        return iter(self.graphs)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GraphSet):
            return NotImplemented
        return self.schema == other.schema and self.graphs == other.graphs

    def __hash__(self):
        return hash(self.graphs)

    def take(self, indices: Iterable[int]) -> "GraphSet":
        return GraphSet(self.graphs[i] for i in indices)

    def __repr__(self) -> str:
        return f"GraphSet({len(self)} graphs, schema={self.schema})"


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _pair_index_to_edges(idx: np.ndarray, n: int) -> np.ndarray:
    """Decode row-major upper-triangle indices into ``(i, j)`` pairs, ``i < j``."""
    idx = np.asarray(idx, dtype=np.int64)
    if len(idx) == 0:
        return np.empty((0, 2), dtype=np.int64)

    def row_start(i):
        return i * (2 * n - i - 1) // 2

    b = 2 * n - 1
    i = np.floor((b - np.sqrt(np.maximum(b * b - 8.0 * idx, 0.0))) / 2).astype(np.int64)
    i = np.clip(i, 0, n - 2)
    # float rounding can put i one row off in either direction
    i = np.where(row_start(i) > idx, i - 1, i)
    i = np.where(row_start(i + 1) <= idx, i + 1, i)
    j = idx - row_start(i) + i + 1
    return np.stack([i, j], axis=1)


def generate_er(n: int, p: float, rng=None) -> Graph:
    """G(n, p): every one of the C(n, 2) pairs is an edge independently with prob ``p``.

    Sampled as ``m ~ Binomial(C(n,2), p)`` followed by a uniform draw of ``m``
    distinct pairs, which has the same law and stays cheap for huge sparse graphs.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = _as_rng(rng)
    total = n * (n - 1) // 2
    if total == 0:
        return Graph(n)
    m = int(rng.binomial(total, p))
    if m == total:
        idx = np.arange(total, dtype=np.int64)
    else:
        idx = rng.choice(total, size=m, replace=False)
    return Graph(n, _pair_index_to_edges(idx, n))


def generate_grid(rows: int, cols: int) -> Graph:
    """2-D lattice; node ``r * cols + c`` sits at row ``r``, column ``c``."""
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be >= 1")
    ids = np.arange(rows * cols).reshape(rows, cols)
    horiz = np.stack([ids[:, :-1].ravel(), ids[:, 1:].ravel()], axis=1)
    vert = np.stack([ids[:-1, :].ravel(), ids[1:, :].ravel()], axis=1)
    return Graph(rows * cols, np.concatenate([horiz, vert]))


def generate_lobster(expected_backbone: float = 40, p1: float = 0.7, p2: float = 0.7, rng=None) -> Graph:
    """Random lobster: a backbone path, legs on backbone nodes, and second-level legs.

    The backbone length is ``int(2 * u * expected_backbone + 0.5)`` with
    ``u ~ U[0, 1)`` (floored at one node). Each backbone node gets a leg with
    probability ``p1``; each leg gets one further node with probability ``p2``.
    """
    for p in (p1, p2):
        if not 0.0 <= p <= 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
    rng = _as_rng(rng)
    backbone = max(1, int(2 * rng.random() * expected_backbone + 0.5))
    edges = [(i, i + 1) for i in range(backbone - 1)]
    nxt = backbone
    for v in range(backbone):
        if rng.random() < p1:
            leg = nxt
            edges.append((v, leg))
            nxt += 1
            if rng.random() < p2:
                edges.append((leg, nxt))
                nxt += 1
    return Graph(nxt, edges)


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def generate_community(num_nodes: int, rng=None, p_intra: float = 0.3, inter_ratio: float = 0.05) -> Graph:
    """Two E-R(n/2, 0.3) communities joined by ``round(0.05 n)`` random cross edges."""
    if num_nodes % 2 or num_nodes < 4:
        raise ValueError("community graphs need an even node count >= 4")
    rng = _as_rng(rng)
    half = num_nodes // 2
    a = generate_er(half, p_intra, rng)
    b = generate_er(half, p_intra, rng)
    n_inter = _round_half_up(inter_ratio * num_nodes)
    cross = rng.choice(half * half, size=n_inter, replace=False)
    inter = np.stack([cross // half, half + cross % half], axis=1)
    edges = np.concatenate([a.edges, b.edges + half, inter])
    return Graph(num_nodes, edges)


def er_twin(g: Graph, rng=None, count_both_directions: bool = False) -> Graph:
    """E-R graph with the same node count and ``p = |E| / |V|^2``.

    ``|E|`` counts undirected edges once unless ``count_both_directions``.
    """
    n = g.num_nodes
    if n < 1:
        raise ValueError("er_twin needs a graph with at least one node")
    m = g.num_edges * (2 if count_both_directions else 1)
    return generate_er(n, min(1.0, m / n**2), rng)


def with_random_labels(
    g: Graph,
    node_probs: Sequence[float],
    edge_probs: Sequence[float],
    rng=None,
) -> Graph:
    """Attach i.i.d. categorical node and edge labels drawn from the given marginals."""
    rng = _as_rng(rng)
    node_probs = np.asarray(node_probs, dtype=float)
    edge_probs = np.asarray(edge_probs, dtype=float)
    nf = rng.choice(len(node_probs), size=g.num_nodes, p=node_probs)
    ef = rng.choice(len(edge_probs), size=g.num_edges, p=edge_probs)
    return Graph(g.num_nodes, g.edges, nf, ef, FeatureSchema(len(node_probs), len(edge_probs)))


# dataset samplers: size ranges follow the benchmark datasets

def grid_dataset(count: int, rng=None, low: int = 10, high: int = 20) -> GraphSet:
    rng = _as_rng(rng)
    out = []
    for _ in range(count):
        r, c = rng.integers(low, high + 1, size=2)
        out.append(generate_grid(int(r), int(c)))
    return GraphSet(out)


def lobster_dataset(
    count: int,
    rng=None,
    expected_backbone: float = 40,
    p1: float = 0.7,
    p2: float = 0.7,
    min_nodes: int = 10,
    max_nodes: int = 100,
) -> GraphSet:
    rng = _as_rng(rng)
    out = []
    while len(out) < count:
        g = generate_lobster(expected_backbone, p1, p2, rng)
        if min_nodes <= g.num_nodes <= max_nodes:
            out.append(g)
    return GraphSet(out)


def community_dataset(count: int, rng=None, low: int = 60, high: int = 160) -> GraphSet:
    rng = _as_rng(rng)
    sizes = 2 * rng.integers(low // 2, high // 2 + 1, size=count)
    return GraphSet(generate_community(int(n), rng) for n in sizes)


# skewed marginals, so uniform resampling moves the feature distribution
LABELED_NODE_PROBS = (0.7, 0.15, 0.1, 0.05)
LABELED_EDGE_PROBS = (0.8, 0.15, 0.05)


def labeled_community_dataset(
    count: int,
    rng=None,
    low: int = 10,
    high: int = 50,
    node_probs: Sequence[float] = LABELED_NODE_PROBS,
    edge_probs: Sequence[float] = LABELED_EDGE_PROBS,
) -> GraphSet:
    """Community graphs carrying categorical node and edge labels.

    Sizes default to 10..50 nodes, the range of small-molecule datasets these
    graphs stand in for.
    """
    rng = _as_rng(rng)
    base = community_dataset(count, rng, low, high)
    return GraphSet(with_random_labels(g, node_probs, edge_probs, rng) for g in base)


def er_dataset(count: int, n: int, p: float, rng=None) -> GraphSet:
    rng = _as_rng(rng)
    return GraphSet(generate_er(n, p, rng) for _ in range(count))


DATASET_FAMILIES = ("grid", "lobster", "community", "community_labeled", "er")


def make_dataset(family: str, count: int, rng=None, **kwargs) -> GraphSet:
    """Build ``count`` graphs of a named family (see ``DATASET_FAMILIES``)."""
    if family == "grid":
        return grid_dataset(count, rng, **kwargs)
    if family == "lobster":
        return lobster_dataset(count, rng, **kwargs)
    if family == "community":
        return community_dataset(count, rng, **kwargs)
    if family == "community_labeled":
        return labeled_community_dataset(count, rng, **kwargs)
    if family == "er":
        return er_dataset(count, int(kwargs.get("n", 50)), float(kwargs.get("p", 0.1)), rng)
    raise ValueError(f"unknown graph family {family!r}; expected one of {', '.join(DATASET_FAMILIES)}")


# ---------------------------------------------------------------------------
# node input features
# ---------------------------------------------------------------------------

def degree_augment(g: Graph) -> np.ndarray:
    """Per-node input features: raw degree, prefixed by a one-hot node category if present."""
    deg = g.degrees().astype(np.float64)[:, None]
    if g.node_features is None:
        return deg
    onehot = np.zeros((g.num_nodes, g.schema.node_cardinality))
    onehot[np.arange(g.num_nodes), g.node_features] = 1.0
    return np.hstack([onehot, deg])


# ---------------------------------------------------------------------------
# file I/O: one JSON record per line
# ---------------------------------------------------------------------------

def graph_to_record(g: Graph) -> dict:
    rec: dict = {"n": g.num_nodes, "edges": g.edges.tolist()}
    if g.node_features is not None:
        rec["node_feats"] = g.node_features.tolist()
    if g.edge_features is not None:
        rec["edge_feats"] = [[i, j, c] for (i, j), c in zip(g.edges.tolist(), g.edge_features.tolist())]
    if g.schema != FeatureSchema():
        rec["schema"] = [g.schema.node_cardinality, g.schema.edge_cardinality]
    return rec


def graph_from_record(rec: dict) -> Graph:
    if not isinstance(rec, dict) or "n" not in rec or "edges" not in rec:
        raise ValueError("record needs 'n' and 'edges'")
    n = rec["n"]
    if not isinstance(n, int) or isinstance(n, bool):
        raise ValueError("'n' must be an integer")
    edges = rec["edges"]
    if any(not isinstance(e, list) or len(e) != 2 for e in edges):
        raise ValueError("'edges' must be a list of [i, j] pairs")
    schema = FeatureSchema(*rec["schema"]) if "schema" in rec else None
    edge_feats = None
    if "edge_feats" in rec:
        triples = rec["edge_feats"]
        if any(not isinstance(t, list) or len(t) != 3 for t in triples):
            raise ValueError("'edge_feats' must be a list of [i, j, c] triples")
        edge_feats = {(min(i, j), max(i, j)): c for i, j, c in triples}
    return Graph(n, edges, rec.get("node_feats"), edge_feats, schema)


def save_graphset(graphs: Iterable[Graph], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for g in graphs:
            fh.write(json.dumps(graph_to_record(g), separators=(",", ":")))
            fh.write("\n")


def load_graphset(path) -> GraphSet:
    graphs: list[Graph] = []
    schema = None
    with open(Path(path), encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                g = graph_from_record(json.loads(line))
            except (ValueError, TypeError, KeyError) as exc:
                raise GraphFormatError(lineno, str(exc)) from exc
            if schema is not None and g.schema != schema:
                raise SchemaError(f"line {lineno}: schema {g.schema} conflicts with {schema}")
            schema = g.schema
            graphs.append(g)
    return GraphSet(graphs)
