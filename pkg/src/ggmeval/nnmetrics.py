"""Embedding-space distances between a reference and a generated set.

All functions take two 2-D arrays with one row per graph (``x_r`` reference,
``x_g`` generated) and equal column counts.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.spatial.distance import cdist, pdist

# base bandwidths, multiplied by the mean pairwise distance of the pooled sets
SIGMA_BASE = (0.01, 0.1, 0.25, 0.5, 0.75, 1.0, 2.5, 5.0, 7.5, 10.0)

# metrics whose raw value is a similarity in [0, 1]-ish; dissimilarity is 1 - s
SIMILARITY_METRICS = frozenset({"precision", "recall", "density", "coverage", "f1_pr", "f1_dc"})
DISTANCE_METRICS = frozenset(
    {"fd", "kid", "mmd_linear", "mmd_rbf", "degree_mmd", "clustering_mmd", "orbit_mmd"}
)


@dataclass(frozen=True)
class MetricScore:
    metric_id: str
    raw: float
    dissimilarity: float

    @classmethod
    def of(cls, metric_id: str, raw: float) -> "MetricScore":
        return cls(metric_id, float(raw), to_dissimilarity(metric_id, raw))


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "rbf"  # linear | polynomial3 | rbf
    sigma: float = 1.0
    squared_distance: bool = True

    def __post_init__(self):
        if self.kind not in ("linear", "polynomial3", "rbf"):
            raise ValueError(f"unknown kernel kind {self.kind!r}")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")


def to_dissimilarity(metric_id: str, raw: float) -> float:
    """Map a raw score so that identical distributions give roughly 0."""
    if metric_id in SIMILARITY_METRICS:
        return 1.0 - float(raw)
    if metric_id in DISTANCE_METRICS:
        return float(raw)
    raise KeyError(f"unknown metric {metric_id!r}")


def _pair(x_r, x_g, min_rows: int = 1):
    x_r = np.atleast_2d(np.asarray(x_r, dtype=np.float64))
    x_g = np.atleast_2d(np.asarray(x_g, dtype=np.float64))
    if x_r.shape[1] != x_g.shape[1]:
        raise ValueError(f"embedding widths differ: {x_r.shape[1]} vs {x_g.shape[1]}")
    if len(x_r) < min_rows or len(x_g) < min_rows:
        raise ValueError(f"each set needs at least {min_rows} rows")
    return x_r, x_g


# ---------------------------------------------------------------------------
# Frechet distance
# ---------------------------------------------------------------------------

def _psd_sqrt(c: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(c)
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.T


def _jittered_cov(x: np.ndarray) -> np.ndarray:
    c = np.atleast_2d(np.cov(x, rowvar=False, ddof=1))
    dim = c.shape[0]
    w = np.linalg.eigvalsh(c)
    # relative threshold: raw-degree GIN features can be many orders above 1
    if w[0] < 1e-10 * max(w[-1], 1.0):
        c = c + (1e-6 * np.trace(c) / dim) * np.eye(dim)
    return c


def frechet_distance(x_r, x_g) -> MetricScore:
    """``|mu_r - mu_g|^2 + Tr(C_r + C_g - 2 (C_r C_g)^{1/2})`` of Gaussian fits."""
    x_r, x_g = _pair(x_r, x_g, min_rows=2)
    mu_r, mu_g = x_r.mean(axis=0), x_g.mean(axis=0)
    s_r, s_g = _psd_sqrt(_jittered_cov(x_r)), _psd_sqrt(_jittered_cov(x_g))
    # Tr((C_r C_g)^{1/2}) is the nuclear norm of C_r^{1/2} C_g^{1/2}, whose singular
    # values are the roots of the eigenvalues of C_r^{1/2} C_g C_r^{1/2}. Writing
    # Tr(C_r) + Tr(C_g) as |S_r - S_g|^2 + 2 Tr(S_r S_g) avoids subtracting traces
    # of order 1e8, which raw-degree embeddings easily reach.
    cross = s_r @ s_g
    nuclear = np.linalg.svd(cross, compute_uv=False).sum()
    value = float(np.sum((mu_r - mu_g) ** 2) + np.sum((s_r - s_g) ** 2) + 2 * (np.trace(cross) - nuclear))
    return MetricScore.of("fd", max(value, 0.0))


# ---------------------------------------------------------------------------
# MMD family
# ---------------------------------------------------------------------------

def kernel_matrix(a: np.ndarray, b: np.ndarray, kernel: KernelSpec) -> np.ndarray:
    if kernel.kind == "linear":
        return a @ b.T
    if kernel.kind == "polynomial3":
        return (a @ b.T / a.shape[1] + 1.0) ** 3
    d = cdist(a, b, "sqeuclidean") if kernel.squared_distance else cdist(a, b)
    return np.exp(-d / (2 * kernel.sigma**2))


def mmd_from_kernels(k_rr: np.ndarray, k_gg: np.ndarray, k_rg: np.ndarray) -> float:
    """Biased estimator: means of the full self-kernel blocks minus twice the cross mean."""
    return float(k_rr.mean() + k_gg.mean() - 2 * k_rg.mean())


def mmd_biased(x_r, x_g, kernel: KernelSpec | Callable | None = None) -> float:
    """MMD^2 with diagonal terms kept in the self-similarity means.

    ``kernel`` is a :class:`KernelSpec` or a callable ``k(A, B) -> |A| x |B|`` matrix.
    """
    x_r, x_g = _pair(x_r, x_g)
    kernel = kernel or KernelSpec()
    kfun = kernel if callable(kernel) else (lambda a, b: kernel_matrix(a, b, kernel))
    return mmd_from_kernels(kfun(x_r, x_r), kfun(x_g, x_g), kfun(x_r, x_g))


def kid(x_r, x_g) -> MetricScore:
    return MetricScore.of("kid", mmd_biased(x_r, x_g, KernelSpec("polynomial3")))


def mmd_linear(x_r, x_g) -> MetricScore:
    return MetricScore.of("mmd_linear", mmd_biased(x_r, x_g, KernelSpec("linear")))


def mean_pairwise_distance(x_r, x_g) -> float:
    """Mean Euclidean distance over all unordered pairs of the pooled sets."""
    pooled = np.vstack(_pair(x_r, x_g))
    if len(pooled) < 2:
        return 0.0
    return float(pdist(pooled).mean())


def sigma_grid(x_r, x_g) -> list[float]:
    scale = mean_pairwise_distance(x_r, x_g)
    if scale == 0.0:
        # every point coincides; any bandwidth gives MMD 0
        return [1.0] * len(SIGMA_BASE)
    return [s * scale for s in SIGMA_BASE]


def mmd_rbf_per_sigma(x_r, x_g, squared_distance: bool = True) -> dict[float, float]:
    x_r, x_g = _pair(x_r, x_g)
    metric = "sqeuclidean" if squared_distance else "euclidean"
    d_rr, d_gg, d_rg = cdist(x_r, x_r, metric), cdist(x_g, x_g, metric), cdist(x_r, x_g, metric)
    out = {}
    for sigma in sigma_grid(x_r, x_g):
        g = 2 * sigma**2
        out[sigma] = mmd_from_kernels(np.exp(-d_rr / g), np.exp(-d_gg / g), np.exp(-d_rg / g))
    return out


def mmd_rbf(x_r, x_g, squared_distance: bool = True) -> MetricScore:
    """RBF-kernel MMD maximised over the data-scaled bandwidth grid."""
    return MetricScore.of("mmd_rbf", max(mmd_rbf_per_sigma(x_r, x_g, squared_distance).values()))


# ---------------------------------------------------------------------------
# precision / recall / density / coverage
# ---------------------------------------------------------------------------

def knn_radii(x: np.ndarray, k: int) -> np.ndarray:
    """Distance from each row to its k-th nearest other row of the same set."""
    d = cdist(x, x)
    np.fill_diagonal(d, np.inf)
    return np.partition(d, k - 1, axis=1)[:, k - 1]


def prdc(x_r, x_g, k: int = 5) -> dict[str, float]:
    """Precision, recall, density and coverage with closed k-NN balls."""
    x_r, x_g = _pair(x_r, x_g)
    if len(x_r) <= k or len(x_g) <= k:
        raise ValueError(f"PRDC with k={k} needs more than {k} rows in each set")
    r_real = knn_radii(x_r, k)
    r_fake = knn_radii(x_g, k)
    d = cdist(x_r, x_g)  # rows: real, columns: generated
    inside_real = d <= r_real[:, None]
    inside_fake = d <= r_fake[None, :]
    return {
        "precision": float(inside_real.any(axis=0).mean()),
        "recall": float(inside_fake.any(axis=1).mean()),
        "density": float(inside_real.sum() / (k * len(x_g))),
        "coverage": float(inside_real.any(axis=1).mean()),
    }


def f1(a: float, b: float) -> float:
    """Harmonic mean; 0 when both inputs are 0."""
    s = a + b
    return 0.0 if s == 0 else 2 * a * b / s


NN_METRICS = (
    "fd",
    "kid",
    "mmd_linear",
    "mmd_rbf",
    "precision",
    "recall",
    "density",
    "coverage",
    "f1_pr",
    "f1_dc",
)


def nn_scores(x_r, x_g, metrics=NN_METRICS, k: int = 5) -> dict[str, MetricScore]:
    """Evaluate the requested embedding metrics, sharing the PRDC computation."""
    out: dict[str, MetricScore] = {}
    pr = None
    for m in metrics:
        if m == "fd":
            out[m] = frechet_distance(x_r, x_g)
        elif m == "kid":
            out[m] = kid(x_r, x_g)
        elif m == "mmd_linear":
            out[m] = mmd_linear(x_r, x_g)
        elif m == "mmd_rbf":
            out[m] = mmd_rbf(x_r, x_g)
        elif m in ("precision", "recall", "density", "coverage", "f1_pr", "f1_dc"):
            if pr is None:
                pr = prdc(x_r, x_g, k)
            if m == "f1_pr":
                raw = f1(pr["precision"], pr["recall"])
            elif m == "f1_dc":
                raw = f1(pr["density"], pr["coverage"])
            else:
                raw = pr[m]
            out[m] = MetricScore.of(m, raw)
        else:
            raise KeyError(f"unknown embedding metric {m!r}")
    return out
