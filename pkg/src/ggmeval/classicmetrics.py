"""Graph-statistic MMD baselines: degree, clustering coefficient and 4-node orbits.

Degree and clustering descriptors are normalised histograms compared with a
1-D earth mover's distance; orbit descriptors are 15-dimensional vectors of
mean per-node orbit counts compared with the Euclidean distance. Either way
the MMD uses the Gaussian kernel ``exp(-d^2 / (2 sigma^2))``.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .graphcore import Graph
from .nnmetrics import MetricScore, mmd_from_kernels

STATISTICS = ("degree", "clustering", "orbit")
DEFAULT_SIGMA = {"degree": 1.0, "clustering": 0.1, "orbit": 30.0}
CLUSTERING_BINS = 100
NUM_ORBITS = 15


# ---------------------------------------------------------------------------
# histograms
# ---------------------------------------------------------------------------

def _normalized(counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total == 0:
        # empty graph: a point mass at bin 0
        out = np.zeros(max(len(counts), 1))
        out[0] = 1.0
        return out
    return counts / total


def degree_hist(g: Graph) -> np.ndarray:
    """Fraction of nodes with degree 0, 1, ..., max degree."""
    return _normalized(np.bincount(g.degrees(), minlength=1))


def local_clustering(g: Graph) -> np.ndarray:
    """Per-node clustering coefficient; nodes of degree < 2 get 0."""
    adj = g.adjacency()
    deg = np.diff(adj.indptr).astype(np.float64)
    # (A^2 ∘ A) row sums are twice the triangles at each node
    tri = np.asarray((adj @ adj).multiply(adj).sum(axis=1)).ravel() / 2
    pairs = deg * (deg - 1) / 2
    out = np.zeros(g.num_nodes)
    mask = pairs > 0
    out[mask] = tri[mask] / pairs[mask]
    return out


def clustering_hist(g: Graph, bins: int = CLUSTERING_BINS) -> np.ndarray:
    counts, _ = np.histogram(local_clustering(g), bins=bins, range=(0.0, 1.0))
    return _normalized(counts)


def pad_histograms(hists: Iterable[np.ndarray]) -> np.ndarray:
    hists = list(hists)
    width = max(len(h) for h in hists)
    out = np.zeros((len(hists), width))
    for i, h in enumerate(hists):
        out[i, : len(h)] = h
    return out


def emd_1d(h1, h2, bin_width: float = 1.0) -> float:
    """Earth mover's distance between two histograms on a common 1-D grid.

    Both inputs should carry the same total mass; the shorter one is padded
    with empty bins. Adjacent bins are ``bin_width`` apart.
    """
    a, b = pad_histograms([np.asarray(h1, float), np.asarray(h2, float)])
    return float(np.abs(np.cumsum(a - b)).sum() * bin_width)


def pairwise_emd(ha: np.ndarray, hb: np.ndarray, bin_width: float = 1.0) -> np.ndarray:
    """All-pairs EMD between rows of two padded histogram matrices."""
    return cdist(np.cumsum(ha, axis=1), np.cumsum(hb, axis=1), "cityblock") * bin_width


# ---------------------------------------------------------------------------
# orbit counting
# ---------------------------------------------------------------------------

# (sorted induced degree sequence) -> orbit id for each induced degree
_FOUR_NODE_ORBITS = {
    (1, 1, 2, 2): {1: 4, 2: 5},  # path
    (1, 1, 1, 3): {1: 6, 3: 7},  # star
    (2, 2, 2, 2): {2: 8},  # cycle
    (1, 2, 2, 3): {1: 9, 2: 10, 3: 11},  # paw
    (2, 2, 3, 3): {2: 12, 3: 13},  # diamond
    (3, 3, 3, 3): {3: 14},  # clique
}


def _connected_quads(adj: Sequence[set[int]]):
    """Yield every connected induced 4-node vertex set exactly once (ESU enumeration)."""

    def extend(sub, ext, root, closed):
        if len(sub) == 4:
            yield sub
            return
        ext = set(ext)
        while ext:
            w = ext.pop()
            new_ext = ext | {u for u in adj[w] if u > root and u not in closed}
            yield from extend(sub + (w,), new_ext, root, closed | adj[w])

    for v in range(len(adj)):
        nbrs = {u for u in adj[v] if u > v}
        if nbrs:
            yield from extend((v,), nbrs, v, adj[v] | {v})


def orbit_counts_per_node(g: Graph) -> np.ndarray:
    """``(num_nodes, 15)`` counts of the graphlet orbits on up to 4 nodes."""
    n = g.num_nodes
    out = np.zeros((n, NUM_ORBITS), dtype=np.int64)
    if n == 0 or g.num_edges == 0:
        return out
    adj = g.neighbor_sets()
    deg = np.array([len(a) for a in adj], dtype=np.int64)
    out[:, 0] = deg

    tri = np.zeros(n, dtype=np.int64)
    for v in range(n):
        nv = adj[v]
        tri[v] = sum(len(adj[u] & nv) for u in nv) // 2
    out[:, 3] = tri
    out[:, 2] = deg * (deg - 1) // 2 - tri
    nbr_deg_sum = np.array([sum(deg[u] - 1 for u in adj[v]) for v in range(n)], dtype=np.int64)
    out[:, 1] = nbr_deg_sum - 2 * tri

    for quad in _connected_quads(adj):
        local = [sum(1 for u in quad if u in adj[v]) for v in quad]
        orbit_of = _FOUR_NODE_ORBITS[tuple(sorted(local))]
        for v, d in zip(quad, local):
            out[v, orbit_of[d]] += 1
    return out


def orbit_counts(g: Graph) -> np.ndarray:
    """Per-orbit mean over nodes of the per-node orbit counts (15-vector)."""
    if g.num_nodes == 0:
        return np.zeros(NUM_ORBITS)
    return orbit_counts_per_node(g).mean(axis=0)


# ---------------------------------------------------------------------------
# MMD
# ---------------------------------------------------------------------------

def descriptors(graphs: Iterable[Graph], statistic: str) -> list[np.ndarray]:
    if statistic == "degree":
        return [degree_hist(g) for g in graphs]
    if statistic == "clustering":
        return [clustering_hist(g) for g in graphs]
    if statistic == "orbit":
        return [orbit_counts(g) for g in graphs]
    raise ValueError(f"unknown statistic {statistic!r}; expected one of {STATISTICS}")


def descriptor_distances(da: Sequence[np.ndarray], db: Sequence[np.ndarray], statistic: str) -> np.ndarray:
    """Pairwise ground distances between two lists of descriptors."""
    if statistic == "orbit":
        return cdist(np.vstack(da), np.vstack(db))
    padded = pad_histograms(list(da) + list(db))
    ha, hb = padded[: len(da)], padded[len(da):]
    # clustering histograms live on [0, 1], so bins are 1/bins apart
    width = 1.0 / padded.shape[1] if statistic == "clustering" else 1.0
    return pairwise_emd(ha, hb, width)


def classical_mmd_from_descriptors(
    d_r: Sequence[np.ndarray],
    d_g: Sequence[np.ndarray],
    statistic: str,
    sigma: float | None = None,
    squared_distance: bool = True,
) -> MetricScore:
    if not d_r or not d_g:
        raise ValueError("classical MMD needs two non-empty sets")
    sigma = DEFAULT_SIGMA[statistic] if sigma is None else sigma

    def k(a, b):
        d = descriptor_distances(a, b, statistic)
        if squared_distance:
            d = d * d
        return np.exp(-d / (2 * sigma**2))

    value = mmd_from_kernels(k(d_r, d_r), k(d_g, d_g), k(d_r, d_g))
    return MetricScore.of(f"{statistic}_mmd", value)


def classical_mmd(
    s_r: Iterable[Graph],
    s_g: Iterable[Graph],
    statistic: str,
    sigma: float | None = None,
    squared_distance: bool = True,
) -> MetricScore:
    """Gaussian-kernel MMD between per-graph statistics of two graph sets."""
    return classical_mmd_from_descriptors(
        descriptors(s_r, statistic), descriptors(s_g, statistic), statistic, sigma, squared_distance
    )
