"""Rank-correlation experiments, sample efficiency and the report they produce."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from ..embed import GinConfig
from ..graphcore import GraphSet, er_twin, make_dataset
from . import perturb
from .cluster import Clustering, cluster_graphs
from .evaluator import SetMetric, SetScorer, is_gin_metric, validate_metrics
from .stats import mean_stderr, spearman

DEFAULT_T_GRID = tuple(i / 10 for i in range(11))
SAMPLE_EFFICIENCY_GRID = (7, 8, 9, 10, 12, 14, 17, 20, 25, 31, 42, 58, 89, 122, 167, 229, 314, 430)

FIDELITY_EXPERIMENTS = ("mixing", "rewiring")
DIVERSITY_EXPERIMENTS = ("mode_collapse", "mode_dropping")
FEATURE_EXPERIMENTS = ("node_feats", "edge_feats")
RANK_EXPERIMENTS = FIDELITY_EXPERIMENTS + DIVERSITY_EXPERIMENTS + FEATURE_EXPERIMENTS

# fixed per-experiment salt for the seed-splitting rule
_EXPERIMENT_CODE = {name: i + 1 for i, name in enumerate(RANK_EXPERIMENTS + ("sample_efficiency",))}

# column groups of the summary table
SUMMARY_COLUMNS = (
    ("fidelity", FIDELITY_EXPERIMENTS),
    ("diversity", DIVERSITY_EXPERIMENTS),
    ("node_feats", ("node_feats",)),
    ("edge_feats", ("edge_feats",)),
)

NO_CONFIG = "-"


def config_label(cfg: GinConfig) -> str:
    label = f"L{cfg.layers}-d{cfg.dim}-{cfg.aggregator}-{cfg.readout}"
    return label if cfg.concat_layers else label + "-last"


def perturbation_rng(seed: int, experiment: str) -> np.random.Generator:
    """Generator for the perturbation draws of one trial; re-created for every t."""
    return np.random.default_rng([seed, _EXPERIMENT_CODE[experiment], 1])


def split_rng(seed: int, experiment: str) -> np.random.Generator:
    return np.random.default_rng([seed, _EXPERIMENT_CODE[experiment], 0])


@dataclass(frozen=True)
class ExperimentSpec:
    """One rank-correlation experiment on one dataset.

    ``graphs`` overrides dataset generation; otherwise ``dataset_size`` graphs
    of family ``dataset`` are drawn with ``dataset_seed``. Metrics that do not
    depend on the GIN are evaluated once per seed, not once per config.
    """

    experiment: str
    dataset: str = "grid"
    dataset_size: int = 100
    dataset_seed: int = 0
    metrics: tuple[str, ...] = ("mmd_rbf",)
    gin_configs: tuple[GinConfig, ...] = (GinConfig(),)
    t_grid: tuple[float, ...] = DEFAULT_T_GRID
    seeds: tuple[int, ...] = tuple(range(10))
    k: int = 5
    graphs: GraphSet | None = field(default=None, compare=False)
    custom_metrics: Mapping[str, SetMetric] | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.experiment not in RANK_EXPERIMENTS:
            raise ValueError(
                f"unknown experiment {self.experiment!r}; expected one of {', '.join(RANK_EXPERIMENTS)}"
            )
        validate_metrics(self.metrics, self.custom_metrics)
        ts = list(self.t_grid)
        if len(ts) < 2 or any(not 0.0 <= t <= 1.0 for t in ts) or ts != sorted(ts):
            raise ValueError("t grid needs at least two increasing values in [0, 1]")
        if not self.seeds:
            raise ValueError("at least one seed is required")
        if not self.gin_configs:
            raise ValueError("at least one GIN config is required")

    def load_graphs(self) -> GraphSet:
        if self.graphs is not None:
            return self.graphs
        return make_dataset(self.dataset, self.dataset_size, np.random.default_rng(self.dataset_seed))


@dataclass(frozen=True)
class ValueRecord:
    experiment: str
    dataset: str
    metric: str
    config: str
    seed: int
    t: float
    value: float


@dataclass(frozen=True)
class RhoRecord:
    experiment: str
    dataset: str
    metric: str
    config: str
    seed: int
    rho: float


@dataclass(frozen=True)
class EfficiencyRecord:
    dataset: str
    metric: str
    config: str
    seed: int
    n_star: int | None  # None: not reached on the tested grid


@dataclass(frozen=True)
class TimingRecord:
    sweep: str
    x: float
    metric: str
    seconds: float


def _fmt(x) -> str:
    if x is None:
        return "not_reached"
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


@dataclass
class ExperimentReport:
    values: list[ValueRecord] = field(default_factory=list)
    rhos: list[RhoRecord] = field(default_factory=list)
    efficiency: list[EfficiencyRecord] = field(default_factory=list)
    timings: list[TimingRecord] = field(default_factory=list)

    def extend(self, other: "ExperimentReport") -> "ExperimentReport":
        self.values += other.values
        self.rhos += other.rhos
        self.efficiency += other.efficiency
        self.timings += other.timings
        return self

    def sorted(self) -> "ExperimentReport":
        """Copy with records in a canonical order, independent of execution order."""
        return ExperimentReport(
            sorted(self.values, key=lambda r: (r.experiment, r.dataset, r.metric, r.config, r.seed, r.t)),
            sorted(self.rhos, key=lambda r: (r.experiment, r.dataset, r.metric, r.config, r.seed)),
            sorted(self.efficiency, key=lambda r: (r.dataset, r.metric, r.config, r.seed)),
            sorted(self.timings, key=lambda r: (r.sweep, r.metric, r.x)),
        )

    def rho_summary(self, experiments: Iterable[str] | None = None, dataset: str | None = None):
        """Metric -> (mean rho, standard error) over all matching trials."""
        exps = None if experiments is None else set(experiments)
        groups: dict[str, list[float]] = {}
        for r in self.rhos:
            if (exps is None or r.experiment in exps) and (dataset is None or r.dataset == dataset):
                groups.setdefault(r.metric, []).append(r.rho)
        return {m: mean_stderr(v) for m, v in groups.items()}

    def efficiency_summary(self, dataset: str | None = None):
        """Metric -> (mean n*, standard error, number of trials that never separated)."""
        groups: dict[str, list] = {}
        for r in self.efficiency:
            if dataset is None or r.dataset == dataset:
                groups.setdefault(r.metric, []).append(r.n_star)
        out = {}
        for m, vals in groups.items():
            reached = [v for v in vals if v is not None]
            mean, se = mean_stderr(reached)
            out[m] = (mean, se, len(vals) - len(reached))
        return out

    def to_csv(self) -> str:
        """Long-format CSV: experiment, dataset, metric, config, seed, t, value.

        Spearman correlations use ``t = rho``; sample efficiency rows use
        experiment ``sample_efficiency`` and ``t = n_star``. Timings are
        excluded because wall-clock values are not reproducible.
        """
        rep = self.sorted()
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["experiment", "dataset", "metric", "config", "seed", "t", "value"])
        for r in rep.values:
            w.writerow([r.experiment, r.dataset, r.metric, r.config, r.seed, _fmt(r.t), _fmt(r.value)])
        for r in rep.rhos:
            w.writerow([r.experiment, r.dataset, r.metric, r.config, r.seed, "rho", _fmt(r.rho)])
        for r in rep.efficiency:
            w.writerow(["sample_efficiency", r.dataset, r.metric, r.config, r.seed, "n_star", _fmt(r.n_star)])
        return buf.getvalue()

    def timings_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["sweep", "x", "metric", "seconds"])
        for r in self.sorted().timings:
            w.writerow([r.sweep, _fmt(float(r.x)), r.metric, _fmt(r.seconds)])
        return buf.getvalue()

    def summary_table(self) -> str:
        """One row per metric; rank-correlation groups, sample efficiency and timing as columns."""
        metrics: list[str] = []
        for r in self.rhos:
            if r.metric not in metrics:
                metrics.append(r.metric)
        for r in self.efficiency:
            if r.metric not in metrics:
                metrics.append(r.metric)
        timing_totals: dict[str, float] = {}
        for r in self.timings:
            timing_totals[r.metric] = timing_totals.get(r.metric, 0.0) + r.seconds
        for m in timing_totals:
            if m not in metrics:
                metrics.append(m)

        cols = [name for name, exps in SUMMARY_COLUMNS if any(r.experiment in exps for r in self.rhos)]
        has_eff = bool(self.efficiency)
        has_time = bool(self.timings)
        header = ["metric"] + cols + (["sample_eff"] if has_eff else []) + (["time_s"] if has_time else [])
        rows = [header]
        summaries = {name: self.rho_summary(exps) for name, exps in SUMMARY_COLUMNS}
        eff = self.efficiency_summary()
        for m in metrics:
            row = [m]
            for name in cols:
                s = summaries[name].get(m)
                row.append("n/a" if s is None else f"{s[0]:.2f} ± {s[1]:.3f}")
            if has_eff:
                e = eff.get(m)
                if e is None:
                    row.append("n/a")
                else:
                    cell = "not reached" if math.isnan(e[0]) else f"{e[0]:.0f} ± {e[1]:.0f}"
                    row.append(cell + (f" ({e[2]} unreached)" if e[2] and not math.isnan(e[0]) else ""))
            if has_time:
                t = timing_totals.get(m)
                row.append("n/a" if t is None else f"{t:.3g}")
            rows.append(row)
        widths = [max(len(r[i]) for r in rows) for i in range(len(header))]
        lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows]
        lines.insert(1, "  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# rank-correlation experiments
# ---------------------------------------------------------------------------

@dataclass
class _Trial:
    ref: GraphSet
    base: GraphSet
    clustering: Clustering | None = None
    centres: dict | None = None


def _make_trial(spec: ExperimentSpec, dataset: GraphSet, full_clustering: Clustering | None, seed: int) -> _Trial:
    if spec.experiment not in DIVERSITY_EXPERIMENTS:
        return _Trial(dataset, dataset)
    # reference and perturbed sets are disjoint halves of the dataset
    perm = split_rng(seed, spec.experiment).permutation(len(dataset))
    half = len(dataset) // 2
    ref_idx, gen_idx = perm[:half], perm[half : 2 * half]
    centres = {c: dataset[i] for c, i in full_clustering.exemplars.items()}
    return _Trial(dataset.take(ref_idx), dataset.take(gen_idx), full_clustering.subset(gen_idx), centres)


def perturb_set(experiment: str, trial: _Trial, t: float, rng: np.random.Generator) -> GraphSet:
    if experiment == "mixing":
        return perturb.perturb_mix(trial.base, t, rng)
    if experiment == "rewiring":
        return perturb.perturb_rewire(trial.base, t, rng)
    if experiment == "mode_collapse":
        return perturb.perturb_mode_collapse(trial.base, trial.clustering, t, rng, trial.centres)
    if experiment == "mode_dropping":
        return perturb.perturb_mode_drop(trial.base, trial.clustering, t, rng)
    if experiment == "node_feats":
        return perturb.perturb_node_feats(trial.base, t, rng)
    if experiment == "edge_feats":
        return perturb.perturb_edge_feats(trial.base, t, rng)
    raise ValueError(f"unknown experiment {experiment!r}")


def _run_trial(spec: ExperimentSpec, trial: _Trial, seed: int, cfg: GinConfig | None, metrics) -> ExperimentReport:
    label = NO_CONFIG if cfg is None else config_label(cfg)
    scorer = SetScorer(
        metrics,
        (cfg or GinConfig()).with_seed(seed),
        schema=trial.ref.schema,
        k=spec.k,
        custom=spec.custom_metrics,
    )
    series: dict[str, list[float]] = {m: [] for m in metrics}
    report = ExperimentReport()
    for t in spec.t_grid:
        gen = perturb_set(spec.experiment, trial, t, perturbation_rng(seed, spec.experiment))
        for m, v in scorer.dissimilarities(trial.ref, gen).items():
            series[m].append(v)
            report.values.append(ValueRecord(spec.experiment, spec.dataset, m, label, seed, float(t), v))
    for m, vals in series.items():
        report.rhos.append(RhoRecord(spec.experiment, spec.dataset, m, label, seed, spearman(vals, spec.t_grid)))
    return report


def run_rank_experiment(spec: ExperimentSpec) -> ExperimentReport:
    """Score every metric against the perturbation degree for each seed and GIN config.

    Each trial evaluates dissimilarity(S_r, S_g(t)) over the t grid and
    records the Spearman correlation between the values and t.
    """
    dataset = spec.load_graphs()
    if len(dataset) < 2:
        raise ValueError("experiments need at least two graphs")
    clustering = cluster_graphs(dataset) if spec.experiment in DIVERSITY_EXPERIMENTS else None
    gin_metrics = [m for m in spec.metrics if is_gin_metric(m)]
    other_metrics = [m for m in spec.metrics if not is_gin_metric(m)]
    report = ExperimentReport()
    for seed in spec.seeds:
        trial = _make_trial(spec, dataset, clustering, seed)
        if other_metrics:
            report.extend(_run_trial(spec, trial, seed, None, other_metrics))
        if gin_metrics:
            for cfg in spec.gin_configs:
                report.extend(_run_trial(spec, trial, seed, cfg, gin_metrics))
    return report.sorted()


# ---------------------------------------------------------------------------
# sample efficiency
# ---------------------------------------------------------------------------

def efficiency_grid(size: int, grid: Sequence[int] = SAMPLE_EFFICIENCY_GRID) -> list[int]:
    """Grid values ``n`` for which two disjoint subsets of size ``n`` fit in ``size`` graphs."""
    return [n for n in grid if 2 * n <= size]


def sample_efficiency(
    reference: GraphSet,
    metric: Callable[[GraphSet, GraphSet], float],
    rng: np.random.Generator,
    grid: Sequence[int] = SAMPLE_EFFICIENCY_GRID,
) -> int | None:
    """Smallest grid size from which real-vs-real always scores below real-vs-random.

    For every ``n``, two disjoint subsets ``A`` and ``B`` of size ``n`` are drawn
    from ``reference``, and ``C`` holds the E-R twins of ``B``. ``n`` counts as
    separated when ``metric(A, B) < metric(A, C)``. Returns the smallest ``n``
    after which every tested size is separated, or ``None``.
    """
    sizes = efficiency_grid(len(reference), grid)
    if not sizes:
        raise ValueError(f"need at least {2 * min(grid)} reference graphs")
    separated = []
    for n in sizes:
        perm = rng.permutation(len(reference))
        a = reference.take(perm[:n])
        b = reference.take(perm[n : 2 * n])
        twin_seeds = rng.integers(0, 2**63 - 1, size=n)
        c = GraphSet(er_twin(g, np.random.default_rng(s)) for g, s in zip(b, twin_seeds))
        separated.append(metric(a, b) < metric(a, c))
    n_star = None
    for n, ok in zip(reversed(sizes), reversed(separated)):
        if not ok:
            break
        n_star = n
    return n_star


@dataclass(frozen=True)
class EfficiencySpec:
    dataset: str = "grid"
    dataset_size: int = 100
    dataset_seed: int = 0
    metrics: tuple[str, ...] = ("mmd_rbf",)
    gin_configs: tuple[GinConfig, ...] = (GinConfig(),)
    seeds: tuple[int, ...] = tuple(range(10))
    grid: tuple[int, ...] = SAMPLE_EFFICIENCY_GRID
    k: int = 5
    graphs: GraphSet | None = field(default=None, compare=False)
    custom_metrics: Mapping[str, SetMetric] | None = field(default=None, compare=False)

    def __post_init__(self):
        validate_metrics(self.metrics, self.custom_metrics)
        if not self.seeds:
            raise ValueError("at least one seed is required")

    load_graphs = ExperimentSpec.load_graphs


def run_sample_efficiency(spec: EfficiencySpec) -> ExperimentReport:
    """n* per metric, seed and config; all metrics of a trial see the same subsets."""
    dataset = spec.load_graphs()
    report = ExperimentReport()
    gin_metrics = [m for m in spec.metrics if is_gin_metric(m)]
    other_metrics = [m for m in spec.metrics if not is_gin_metric(m)]
    groups = [(None, other_metrics)] if other_metrics else []
    groups += [(cfg, gin_metrics) for cfg in spec.gin_configs] if gin_metrics else []
    for seed in spec.seeds:
        for cfg, metrics in groups:
            scorer = SetScorer(
                metrics, (cfg or GinConfig()).with_seed(seed), dataset.schema, spec.k, spec.custom_metrics
            )
            label = NO_CONFIG if cfg is None else config_label(cfg)
            for m in metrics:
                one = scorer.metric_function(m)
                rng = np.random.default_rng([seed, _EXPERIMENT_CODE["sample_efficiency"]])
                n_star = sample_efficiency(dataset, one, rng, spec.grid)
                report.efficiency.append(EfficiencyRecord(spec.dataset, m, label, seed, n_star))
    return report.sorted()

