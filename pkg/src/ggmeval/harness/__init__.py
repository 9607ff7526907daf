"""Benchmark protocol: perturb a reference set and check that metrics track the perturbation."""

from .cluster import Clustering, affinity_propagation, cluster_graphs, wl_kernel_matrix, wl_subtree_kernel
from .evaluator import ALL_METRICS, CLASSICAL_METRICS, NN_METRICS, SetScorer
from .experiments import (
    DEFAULT_T_GRID,
    SAMPLE_EFFICIENCY_GRID,
    EfficiencySpec,
    ExperimentReport,
    ExperimentSpec,
    run_rank_experiment,
    run_sample_efficiency,
    sample_efficiency,
)
from .perturb import (
    perturb_edge_feats,
    perturb_mix,
    perturb_mode_collapse,
    perturb_mode_drop,
    perturb_node_feats,
    perturb_rewire,
    rewire_graph,
)
from .stats import mean_stderr, spearman
from .timing import TimingSpec, time_metrics, timing_suite
