"""Wall-clock scaling of the metrics on Erdos-Renyi sets."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .. import classicmetrics, nnmetrics
from ..embed import GinConfig, embed_set, init_weights
from ..graphcore import GraphSet, er_dataset
from .evaluator import CLASSICAL_METRICS, NN_METRICS, validate_metrics
from .experiments import ExperimentReport, TimingRecord

# sparsity of a protein-interaction-like dataset: mean |E| = 646 at mean |V| = 258
PROTEINS_LIKE_P = 646 / 258**2

SAMPLES_SWEEP = (100,) + tuple(range(1000, 10001, 1000))
EDGES_SWEEP = (0.01,) + tuple(round(0.1 * i, 1) for i in range(1, 11))
NODES_SWEEP = (1000,) + tuple(range(10000, 100001, 10000))

SWEEP_NODES_SAMPLES = 50
SWEEP_GRAPHS = 50
SWEEP_NODES_EDGES = 1000
TARGET_NONZEROS = 10000

# embedding extraction, timed apart from the metrics that consume it
ACTIVATIONS = "activations"


def sweep_parameters(sweep: str, x: float) -> tuple[int, int, float]:
    """(number of graphs, nodes per graph, edge probability) for one sweep point."""
    if sweep == "samples":
        return int(x), SWEEP_NODES_SAMPLES, PROTEINS_LIKE_P
    if sweep == "edges":
        return SWEEP_GRAPHS, SWEEP_NODES_EDGES, float(x)
    if sweep == "nodes":
        # about TARGET_NONZEROS adjacency entries (ordered node pairs) per graph
        return SWEEP_GRAPHS, int(x), min(1.0, TARGET_NONZEROS / float(x) ** 2)
    raise ValueError(f"unknown sweep {sweep!r}; expected samples, edges or nodes")


@dataclass(frozen=True)
class TimingSpec:
    """Sweeps to run; ``budget_s`` stops a metric's sweep once one point exceeds it."""

    sweeps: Mapping[str, Sequence[float]] = field(
        default_factory=lambda: {"samples": SAMPLES_SWEEP, "edges": EDGES_SWEEP, "nodes": NODES_SWEEP}
    )
    metrics: tuple[str, ...] = ("fd", "mmd_rbf", "f1_pr", "degree_mmd", "clustering_mmd", "orbit_mmd")
    gin: GinConfig = GinConfig(layers=7, dim=20)
    seed: int = 0
    budget_s: float | None = None

    def __post_init__(self):
        validate_metrics(self.metrics)
        for name in self.sweeps:
            sweep_parameters(name, 1000)


def time_metrics(
    ref: GraphSet, gen: GraphSet, metrics: Sequence[str], gin: GinConfig | None = None, k: int = 5
) -> dict[str, float]:
    """Seconds per metric on one pair of sets; embedding time is reported as ``activations``."""
    out: dict[str, float] = {}
    nn = [m for m in metrics if m in NN_METRICS]
    if nn:
        start = time.perf_counter()
        weights = init_weights(gin or GinConfig(), ref.schema)
        x_r, x_g = embed_set(ref, weights), embed_set(gen, weights)
        out[ACTIVATIONS] = time.perf_counter() - start
        for m in nn:
            start = time.perf_counter()
            nnmetrics.nn_scores(x_r, x_g, [m], k)
            out[m] = time.perf_counter() - start
    for m in metrics:
        if m in CLASSICAL_METRICS:
            start = time.perf_counter()
            classicmetrics.classical_mmd(ref, gen, m[: -len("_mmd")])
            out[m] = time.perf_counter() - start
    return out


def timing_suite(spec: TimingSpec | None = None) -> ExperimentReport:
    spec = spec or TimingSpec()
    report = ExperimentReport()
    for sweep, xs in spec.sweeps.items():
        active = list(spec.metrics)
        for x in xs:
            if not active:
                break
            count, n, p = sweep_parameters(sweep, x)
            rng = np.random.default_rng([spec.seed, int(round(float(x) * 1000))])
            ref = er_dataset(count, n, p, rng)
            gen = er_dataset(count, n, p, rng)
            seconds = time_metrics(ref, gen, active, spec.gin)
            for m, s in seconds.items():
                report.timings.append(TimingRecord(sweep, float(x), m, s))
            if spec.budget_s is not None:
                active = [m for m in active if seconds[m] <= spec.budget_s]
    return report.sorted()
