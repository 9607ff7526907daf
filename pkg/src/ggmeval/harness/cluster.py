"""Mode discovery: WL-subtree graph similarity followed by affinity propagation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from ..graphcore import Graph


@dataclass(frozen=True)
class Clustering:
    """Cluster id per graph plus one exemplar (graph index) per cluster."""

    assignment: tuple[int, ...]
    exemplars: dict[int, int]
    # True when affinity propagation did not converge to any exemplar
    fallback: bool = field(default=False, compare=False)

    def __post_init__(self):
        for c, i in self.exemplars.items():
            if self.assignment[i] != c:
                raise ValueError(f"exemplar {i} is not a member of its cluster {c}")
        if set(self.assignment) != set(self.exemplars):
            raise ValueError("every cluster needs exactly one exemplar and at least one member")

    @property
    def num_clusters(self) -> int:
        return len(self.exemplars)

    def members(self, cluster: int) -> list[int]:
        return [i for i, c in enumerate(self.assignment) if c == cluster]

    def subset(self, indices: Sequence[int]) -> "Clustering":
        """Restrict to ``indices``; clusters losing their exemplar take their first remaining member."""
        indices = list(indices)
        assignment = tuple(self.assignment[i] for i in indices)
        pos = {orig: new for new, orig in enumerate(indices)}
        exemplars = {}
        for new, c in enumerate(assignment):
            if c not in exemplars:
                ex = self.exemplars[c]
                exemplars[c] = pos.get(ex, new)
        return Clustering(assignment, exemplars, self.fallback)


# ---------------------------------------------------------------------------
# Weisfeiler-Lehman subtree kernel
# ---------------------------------------------------------------------------

def wl_features(graphs: Sequence[Graph], h: int = 3) -> sparse.csr_matrix:
    """Counts of WL subtree patterns over rounds ``0..h``, one row per graph.

    All nodes start with the same label; labels are compressed with a
    dictionary shared by every graph so columns are comparable.
    """
    adj = [g.neighbor_sets() for g in graphs]
    labels = [[0] * g.num_nodes for g in graphs]
    rows, cols = [], []
    next_id = 1
    for gi, lab in enumerate(labels):
        rows.extend([gi] * len(lab))
        cols.extend(lab)
    for _ in range(h):
        table: dict = {}
        new_labels = []
        for gi, (lab, nbrs) in enumerate(zip(labels, adj)):
            relabelled = []
            for v, nb in enumerate(nbrs):
                sig = (lab[v], tuple(sorted(lab[u] for u in nb)))
                code = table.get(sig)
                if code is None:
                    code = table[sig] = next_id
                    next_id += 1
                relabelled.append(code)
            new_labels.append(relabelled)
            rows.extend([gi] * len(relabelled))
            cols.extend(relabelled)
        labels = new_labels
    data = np.ones(len(rows))
    return sparse.csr_matrix((data, (rows, cols)), shape=(len(graphs), next_id))


def wl_kernel_matrix(graphs: Sequence[Graph], h: int = 3, normalized: bool = True) -> np.ndarray:
    phi = wl_features(graphs, h)
    k = (phi @ phi.T).toarray()
    if normalized:
        d = np.sqrt(np.diag(k))
        d[d == 0] = 1.0
        k = k / np.outer(d, d)
    return k


def wl_subtree_kernel(g1: Graph, g2: Graph, h: int = 3, normalized: bool = False) -> float:
    return float(wl_kernel_matrix([g1, g2], h, normalized)[0, 1])


# ---------------------------------------------------------------------------
# affinity propagation
# ---------------------------------------------------------------------------

def affinity_propagation(
    similarity,
    damping: float = 0.5,
    max_iter: int = 200,
    convergence_iter: int = 15,
    preference: float | None = None,
    seed: int = 0,
) -> Clustering:
    """Exemplar clustering by responsibility/availability message passing.

    The preference (self-similarity) defaults to the median off-diagonal
    similarity. Tiny seeded noise breaks ties between identical points. If no
    exemplar emerges, a single cluster around the point with the largest total
    similarity is returned with ``fallback=True``.
    """
    s_in = np.array(similarity, dtype=np.float64)
    n = s_in.shape[0]
    if s_in.shape != (n, n):
        raise ValueError("similarity matrix must be square")
    if n == 1:
        return Clustering((0,), {0: 0})
    off = s_in[~np.eye(n, dtype=bool)]
    if preference is None:
        preference = float(np.median(off))
    s = s_in.copy()
    np.fill_diagonal(s, preference)

    if np.all(off == off[0]):
        # identical points: one cluster unless every point prefers itself
        if preference <= off[0]:
            return Clustering((0,) * n, {0: 0})
        return Clustering(tuple(range(n)), {i: i for i in range(n)})

    rng = np.random.default_rng(seed)
    s_noisy = s + (np.finfo(float).eps * s + np.finfo(float).tiny * 100) * rng.standard_normal((n, n))

    idx = np.arange(n)
    r = np.zeros((n, n))
    a = np.zeros((n, n))
    history = np.zeros((n, convergence_iter), dtype=bool)
    is_ex = np.zeros(n, dtype=bool)
    for it in range(max_iter):
        as_ = a + s_noisy
        best = np.argmax(as_, axis=1)
        first = as_[idx, best]
        as_[idx, best] = -np.inf
        second = as_.max(axis=1)
        r_new = s_noisy - first[:, None]
        r_new[idx, best] = s_noisy[idx, best] - second
        r = damping * r + (1 - damping) * r_new

        rp = np.maximum(r, 0)
        rp[idx, idx] = r[idx, idx]
        a_new = rp.sum(axis=0)[None, :] - rp
        self_avail = a_new[idx, idx].copy()
        a_new = np.minimum(a_new, 0)
        a_new[idx, idx] = self_avail
        a = damping * a + (1 - damping) * a_new

        is_ex = (np.diag(a) + np.diag(r)) > 0
        history[:, it % convergence_iter] = is_ex
        if it >= convergence_iter:
            stable = history.sum(axis=1)
            if np.all((stable == 0) | (stable == convergence_iter)) and is_ex.any():
                break

    exemplars = np.flatnonzero(is_ex)
    if len(exemplars) == 0:
        centre = int(np.argmax(s_in.sum(axis=1)))
        return Clustering((0,) * n, {0: centre}, fallback=True)
    labels = np.argmax(s[:, exemplars], axis=1)
    labels[exemplars] = np.arange(len(exemplars))
    return Clustering(
        tuple(int(c) for c in labels),
        {c: int(i) for c, i in enumerate(exemplars)},
    )


def cluster_graphs(
    graphs: Sequence[Graph],
    wl_iterations: int = 3,
    damping: float = 0.5,
    max_iter: int = 200,
    seed: int = 0,
) -> Clustering:
    """Cluster graphs by affinity propagation on normalised WL-subtree similarities."""
    return affinity_propagation(
        wl_kernel_matrix(graphs, wl_iterations, normalized=True),
        damping=damping,
        max_iter=max_iter,
        seed=seed,
    )
