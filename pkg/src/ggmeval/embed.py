"""Random (untrained) GIN feature extractor.

Each propagation round computes, for every node ``v``,

    h_v <- MLP(h_v + AGG({h_u : u in N(v)}))

and the graph embedding concatenates a READOUT over nodes of every round's
node embeddings. With edge features, a message from ``u`` is
``concat(h_u, onehot(a_uv))`` and the self term is ``concat(h_v, 0)``.

Weights are drawn once from a seeded generator and never trained. Many graphs
are processed together as one block-diagonal graph, so a single forward pass
over a whole set costs a handful of sparse matrix products per round.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from typing import Mapping, Sequence

import numpy as np
from scipy import sparse

from .graphcore import FeatureSchema, Graph, GraphSet, SchemaError, degree_augment

AGGREGATORS = ("sum", "mean", "max")
INITS = ("orthogonal", "uniform")


@dataclass(frozen=True)
class GinConfig:
    """Architecture of the random GIN.

    ``layers`` is the number of propagation rounds and ``dim`` the node
    embedding width, so embeddings have ``layers * dim`` columns when
    ``concat_layers`` is on and ``dim`` otherwise.
    """

    layers: int = 3
    dim: int = 35
    aggregator: str = "sum"
    readout: str = "sum"
    concat_layers: bool = True
    mlp_layers: int = 2
    seed: int = 0
    init: str = "orthogonal"

    def __post_init__(self):
        if self.layers < 1 or self.dim < 1 or self.mlp_layers < 1:
            raise ValueError("layers, dim and mlp_layers must all be >= 1")
        if self.aggregator not in AGGREGATORS or self.readout not in AGGREGATORS:
            raise ValueError(f"aggregator/readout must be one of {AGGREGATORS}")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}")

    @property
    def out_dim(self) -> int:
        return self.layers * self.dim if self.concat_layers else self.dim

    @classmethod
    def from_mapping(cls, values: Mapping[str, str]) -> "GinConfig":
        """Build from string ``key=value`` pairs, e.g. a parsed config file."""
        kinds = {f.name: f.type for f in fields(cls)}
        parsed = {}
        for key, raw in values.items():
            if key not in kinds:
                raise ValueError(f"unknown GIN config key {key!r}")
            kind = kinds[key]
            if kind in ("int", int):
                parsed[key] = int(raw)
            elif kind in ("bool", bool):
                parsed[key] = str(raw).strip().lower() in ("1", "true", "yes", "on")
            else:
                parsed[key] = str(raw).strip()
        return cls(**parsed)

    def with_seed(self, seed: int) -> "GinConfig":
        return replace(self, seed=int(seed))


def read_config_file(path) -> GinConfig:
    """Parse a flat ``key=value`` file (``#`` comments allowed) into a :class:`GinConfig`."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            if not sep:
                raise ValueError(f"expected key=value, got {line!r}")
            values[key.strip()] = val.strip()
    return GinConfig.from_mapping(values)


@dataclass(frozen=True)
class GinWeights:
    config: GinConfig
    schema: FeatureSchema
    # one tuple of (W, b) pairs per propagation round; W maps rows: x @ W + b
    mlps: tuple

    @property
    def input_dim(self) -> int:
        return self.schema.node_cardinality + 1


def orthogonal(shape: tuple[int, int], rng: np.random.Generator) -> np.ndarray:
    """Random matrix with orthonormal columns (tall) or orthonormal rows (wide)."""
    rows, cols = shape
    a = rng.standard_normal((max(rows, cols), min(rows, cols)))
    q, r = np.linalg.qr(a)
    q = q * np.sign(np.diag(r))
    if rows < cols:
        q = q.T
    return np.ascontiguousarray(q)


def init_weights(config: GinConfig, schema: FeatureSchema | None = None) -> GinWeights:
    """Draw frozen MLP weights for every round; biases start at zero."""
    schema = schema or FeatureSchema()
    rng = np.random.default_rng(config.seed)
    in_dim = schema.node_cardinality + 1
    mlps = []
    for _ in range(config.layers):
        width = in_dim + schema.edge_cardinality
        layers = []
        for _ in range(config.mlp_layers):
            if config.init == "orthogonal":
                w = orthogonal((width, config.dim), rng)
            else:
                bound = 1.0 / np.sqrt(width)
                w = rng.uniform(-bound, bound, size=(width, config.dim))
            w.setflags(write=False)
            b = np.zeros(config.dim)
            b.setflags(write=False)
            layers.append((w, b))
            width = config.dim
        mlps.append(tuple(layers))
        in_dim = config.dim
    return GinWeights(config, schema, tuple(mlps))


class _Batch:
    """Several graphs glued into one block-diagonal graph."""

    def __init__(self, graphs: Sequence[Graph], schema: FeatureSchema):
        sizes = np.array([g.num_nodes for g in graphs], dtype=np.int64)
        offsets = np.concatenate([[0], np.cumsum(sizes)])
        self.starts = offsets[:-1]
        self.sizes = sizes
        total = int(offsets[-1])

        self.x = np.vstack([degree_augment(g) for g in graphs])
        edges = np.concatenate([g.edges + off for g, off in zip(graphs, self.starts)]) if total else np.empty((0, 2))
        edges = edges.astype(np.int64).reshape(-1, 2)
        src = np.concatenate([edges[:, 0], edges[:, 1]])
        dst = np.concatenate([edges[:, 1], edges[:, 0]])
        # row v lists the neighbours of v
        self.adj = sparse.csr_matrix((np.ones(len(src)), (dst, src)), shape=(total, total))
        self.adj.sort_indices()
        self.degree = np.diff(self.adj.indptr)

        self.edge_onehot_sum = None
        if schema.has_edge_features:
            cats = np.concatenate([g.edge_features for g in graphs])
            cats = np.concatenate([cats, cats])
            inc = sparse.csr_matrix(
                (np.ones(len(dst)), (dst, cats)), shape=(total, schema.edge_cardinality)
            )
            self.edge_onehot_sum = inc.toarray()


def _segment_max(values: np.ndarray, indptr: np.ndarray) -> np.ndarray:
    """Row-wise max over CSR segments; empty segments give zeros."""
    out = np.zeros((len(indptr) - 1, values.shape[1]))
    nonempty = np.flatnonzero(np.diff(indptr) > 0)
    if len(nonempty):
        out[nonempty] = np.maximum.reduceat(values, indptr[nonempty], axis=0)
    return out


def _aggregate(batch: _Batch, h: np.ndarray, how: str) -> np.ndarray:
    if how == "sum":
        return batch.adj @ h
    if how == "mean":
        s = batch.adj @ h
        return s / np.maximum(batch.degree, 1)[:, None]
    return _segment_max(h[batch.adj.indices], batch.adj.indptr)


def _edge_aggregate(batch: _Batch, how: str) -> np.ndarray:
    s = batch.edge_onehot_sum
    if how == "sum":
        return s
    if how == "mean":
        return s / np.maximum(batch.degree, 1)[:, None]
    # max over one-hot vectors marks which categories occur at all
    return (s > 0).astype(np.float64)


def _readout(batch: _Batch, h: np.ndarray, how: str) -> np.ndarray:
    if how == "sum":
        return np.add.reduceat(h, batch.starts, axis=0)
    if how == "mean":
        return np.add.reduceat(h, batch.starts, axis=0) / batch.sizes[:, None]
    return np.maximum.reduceat(h, batch.starts, axis=0)


def _mlp(z: np.ndarray, layers) -> np.ndarray:
    last = len(layers) - 1
    for i, (w, b) in enumerate(layers):
        # einsum keeps each row's arithmetic independent of its position in the
        # batch (BLAS does not), so a graph embeds bit-identically in any set
        z = np.einsum("ij,jk->ik", z, w, optimize=False) + b
        if i < last:
            z = np.maximum(z, 0.0)
    return z


def _check(graphs: Sequence[Graph], weights: GinWeights, first_index: int = 0) -> None:
    for i, g in enumerate(graphs):
        if g.schema != weights.schema:
            raise SchemaError(
                f"graph {first_index + i}: schema {g.schema} does not match GIN weights {weights.schema}"
            )
        if g.num_nodes < 1:
            raise ValueError(f"graph {first_index + i}: cannot embed a graph with no nodes")


def _forward_batch(graphs: Sequence[Graph], weights: GinWeights) -> np.ndarray:
    cfg = weights.config
    batch = _Batch(graphs, weights.schema)
    edge_part = None
    if weights.schema.has_edge_features:
        edge_part = _edge_aggregate(batch, cfg.aggregator)
    h = batch.x
    pooled = []
    for layers in weights.mlps:
        z = h + _aggregate(batch, h, cfg.aggregator)
        if edge_part is not None:
            z = np.hstack([z, edge_part])
        h = _mlp(z, layers)
        pooled.append(_readout(batch, h, cfg.readout))
    out = np.hstack(pooled) if cfg.concat_layers else pooled[-1]
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("non-finite values in graph embeddings")
    return out


def forward(g: Graph, weights: GinWeights) -> np.ndarray:
    """Embedding vector of a single graph."""
    _check([g], weights)
    return _forward_batch([g], weights)[0]


def _thread_cap() -> int:
    try:
        return max(1, int(os.environ.get("GGM_EVAL_THREADS", "1")))
    except ValueError:
        return 1


def embed_set(
    graphs: GraphSet | Sequence[Graph],
    weights: GinWeights,
    max_nodes_per_batch: int = 200_000,
    threads: int | None = None,
) -> np.ndarray:
    """Embedding matrix with one row per graph, in input order."""
    graphs = list(graphs)
    _check(graphs, weights)
    if not graphs:
        return np.empty((0, weights.config.out_dim))
    chunks, cur, cur_nodes = [], [], 0
    for g in graphs:
        if cur and cur_nodes + g.num_nodes > max_nodes_per_batch:
            chunks.append(cur)
            cur, cur_nodes = [], 0
        cur.append(g)
        cur_nodes += g.num_nodes
    chunks.append(cur)

    threads = min(threads or _thread_cap(), len(chunks))
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda c: _forward_batch(c, weights), chunks))
    else:
        parts = [_forward_batch(c, weights) for c in chunks]
    return np.vstack(parts)


def pca_project(x: np.ndarray, k: int) -> np.ndarray:
    """Coordinates of the rows of ``x`` on the top-``k`` principal components.

    Signs are fixed so that each component's largest-magnitude loading is
    positive. Components beyond the rank of the centred data are returned as
    zero columns.
    """
    x = np.asarray(x, dtype=np.float64)
    n, dim = x.shape
    if n < 2:
        raise ValueError("PCA needs at least two rows")
    if k > dim:
        raise ValueError(f"k={k} exceeds the embedding width {dim}")
    xc = x - x.mean(axis=0)
    _, s, vt = np.linalg.svd(xc, full_matrices=False)
    tol = s.max(initial=0.0) * max(n, dim) * np.finfo(float).eps
    rank = int(np.sum(s > tol))
    out = np.zeros((n, k))
    use = min(k, rank)
    if k > rank:
        warnings.warn(f"requested {k} components but data rank is {rank}; padding with zeros")
    for c in range(use):
        v = vt[c]
        if v[np.argmax(np.abs(v))] < 0:
            v = -v
        out[:, c] = xc @ v
    return out


def write_matrix_csv(x: np.ndarray, path) -> None:
    """Row-major CSV with 17 significant digits, enough to round-trip float64."""
    with open(path, "w", encoding="utf-8") as fh:
        for row in np.asarray(x, dtype=np.float64):
            fh.write(",".join(format(v, ".17g") for v in row))
            fh.write("\n")


def read_matrix_csv(path) -> np.ndarray:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                rows.append([float(v) for v in line.split(",")])
    return np.array(rows, dtype=np.float64)
