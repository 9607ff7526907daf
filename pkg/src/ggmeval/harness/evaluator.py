"""Score pairs of graph sets with any mix of embedding and graph-statistic metrics."""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .. import classicmetrics, nnmetrics
from ..embed import GinConfig, GinWeights, embed_set, init_weights
from ..graphcore import FeatureSchema, Graph

CLASSICAL_METRICS = ("degree_mmd", "clustering_mmd", "orbit_mmd")
NN_METRICS = nnmetrics.NN_METRICS
ALL_METRICS = NN_METRICS + CLASSICAL_METRICS

SetMetric = Callable[[Sequence[Graph], Sequence[Graph]], float]


def is_gin_metric(metric: str) -> bool:
    return metric in NN_METRICS


def validate_metrics(metrics: Iterable[str], custom: Mapping[str, SetMetric] | None = None) -> list[str]:
    metrics = list(metrics)
    if not metrics:
        raise ValueError("at least one metric is required")
    known = set(ALL_METRICS) | set(custom or {})
    unknown = [m for m in metrics if m not in known]
    if unknown:
        raise ValueError(f"unknown metric(s): {', '.join(unknown)}")
    return metrics


class SetScorer:
    """Evaluates metrics between graph sets under one random GIN.

    Per-graph embeddings and statistic descriptors are cached by graph
    fingerprint, so graphs shared between many perturbed sets are processed
    once. ``custom`` maps extra metric names to ``f(ref, gen) -> dissimilarity``.
    """

    def __init__(
        self,
        metrics: Iterable[str],
        config: GinConfig | None = None,
        schema: FeatureSchema | None = None,
        k: int = 5,
        custom: Mapping[str, SetMetric] | None = None,
    ):
        self.custom = dict(custom or {})
        self.metrics = validate_metrics(metrics, self.custom)
        self.config = config or GinConfig()
        self.k = k
        self._schema = schema
        self._weights: GinWeights | None = None
        self._emb: dict[str, np.ndarray] = {}
        self._desc: dict[str, dict[str, np.ndarray]] = {}

    @property
    def weights(self) -> GinWeights:
        if self._weights is None:
            self._weights = init_weights(self.config, self._schema)
        return self._weights

    def embed(self, graphs: Sequence[Graph]) -> np.ndarray:
        if self._schema is None and len(graphs):
            self._schema = graphs[0].schema
        keys = [g.fingerprint() for g in graphs]
        missing = {}
        for key, g in zip(keys, graphs):
            if key not in self._emb and key not in missing:
                missing[key] = g
        if missing:
            rows = embed_set(list(missing.values()), self.weights)
            self._emb.update(zip(missing.keys(), rows))
        return np.vstack([self._emb[key] for key in keys])

    def descriptors(self, graphs: Sequence[Graph], statistic: str) -> list[np.ndarray]:
        cache = self._desc.setdefault(statistic, {})
        out = []
        for g in graphs:
            key = g.fingerprint()
            if key not in cache:
                cache[key] = classicmetrics.descriptors([g], statistic)[0]
            out.append(cache[key])
        return out

    def score(
        self, ref: Sequence[Graph], gen: Sequence[Graph], metrics: Sequence[str] | None = None
    ) -> dict[str, nnmetrics.MetricScore | float]:
        """Metric id -> :class:`MetricScore` (custom metrics map to plain floats).

        ``metrics`` restricts evaluation to a subset of the configured metrics.
        """
        metrics = self.metrics if metrics is None else list(metrics)
        extra = set(metrics) - set(self.metrics)
        if extra:
            raise ValueError(f"metric(s) not configured on this scorer: {', '.join(sorted(extra))}")
        out: dict = {}
        nn = [m for m in metrics if is_gin_metric(m)]
        if nn:
            out.update(nnmetrics.nn_scores(self.embed(ref), self.embed(gen), nn, self.k))
        for m in metrics:
            if m in CLASSICAL_METRICS:
                stat = m[: -len("_mmd")]
                out[m] = classicmetrics.classical_mmd_from_descriptors(
                    self.descriptors(ref, stat), self.descriptors(gen, stat), stat
                )
            elif m in self.custom:
                out[m] = float(self.custom[m](ref, gen))
        return {m: out[m] for m in metrics}

    def dissimilarities(
        self, ref: Sequence[Graph], gen: Sequence[Graph], metrics: Sequence[str] | None = None
    ) -> dict[str, float]:
        return {
            m: (s.dissimilarity if isinstance(s, nnmetrics.MetricScore) else s)
            for m, s in self.score(ref, gen, metrics).items()
        }

    def metric_function(self, metric: str) -> Callable[[Sequence[Graph], Sequence[Graph]], float]:
        """Single-metric dissimilarity sharing this scorer's weights and caches."""
        return lambda ref, gen: self.dissimilarities(ref, gen, [metric])[metric]
