"""Command-line entry point: ``ggm-eval {compare,benchmark,generate,embed}``."""

from __future__ import annotations

import argparse
import csv
import io
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .embed import GinConfig, embed_set, init_weights, pca_project, write_matrix_csv
from .graphcore import (
    DATASET_FAMILIES,
    GraphFormatError,
    GraphSet,
    SchemaError,
    load_graphset,
    make_dataset,
    save_graphset,
)
from .harness.evaluator import ALL_METRICS, SetScorer, is_gin_metric, validate_metrics
from .harness.experiments import (
    EfficiencySpec,
    ExperimentReport,
    ExperimentSpec,
    run_rank_experiment,
    run_sample_efficiency,
)
from .harness.specfile import SpecError, read_spec
from .harness.stats import mean_stderr
from .harness.timing import timing_suite
from .nnmetrics import MetricScore

log = logging.getLogger("ggmeval")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3

# below this many graphs per set, MMD RBF does not reliably separate real from random
MMD_RBF_MIN_SAMPLES = 42


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


def default_metrics(n_ref: int, n_gen: int) -> list[str]:
    return ["mmd_rbf"] if min(n_ref, n_gen) >= MMD_RBF_MIN_SAMPLES else ["f1_pr"]


def _gin_from_args(args) -> GinConfig:
    try:
        return GinConfig(
            layers=args.gin_layers,
            dim=args.gin_dim,
            aggregator=args.agg,
            readout=args.readout,
            concat_layers=not args.no_concat,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load(path: str) -> GraphSet:
    try:
        return load_graphset(path)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except (GraphFormatError, SchemaError) as exc:
        raise DataError(f"{path}: {exc}") from exc


def _emit(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# compare
# ---------------------------------------------------------------------------

def _value(s) -> tuple[float, float]:
    return (s.raw, s.dissimilarity) if isinstance(s, MetricScore) else (float(s), float(s))


def compare_sets(
    ref: GraphSet,
    gen: GraphSet,
    metrics: list[str],
    gin: GinConfig,
    seeds: int,
    base_seed: int = 0,
    k: int = 5,
    baseline: bool = False,
) -> list[dict]:
    """Per-metric mean and standard error over GIN initialisations.

    Trial ``i`` uses GIN seed ``base_seed + i``; metrics that do not use the
    GIN are evaluated once. The baseline scores two halves of a seeded 50/50
    split of ``ref`` against each other.
    """
    if ref.schema is not None and gen.schema is not None and ref.schema != gen.schema:
        raise SchemaError(f"feature schemas differ: reference {ref.schema}, generated {gen.schema}")
    halves = None
    if baseline:
        perm = np.random.default_rng(base_seed).permutation(len(ref))
        half = len(ref) // 2
        halves = ref.take(perm[:half]), ref.take(perm[half : 2 * half])
    raw: dict[str, list[float]] = {m: [] for m in metrics}
    dis: dict[str, list[float]] = {m: [] for m in metrics}
    base: dict[str, list[float]] = {m: [] for m in metrics}
    for i in range(seeds):
        todo = metrics if i == 0 else [m for m in metrics if is_gin_metric(m)]
        if not todo:
            break
        scorer = SetScorer(todo, gin.with_seed(base_seed + i), ref.schema, k)
        for m, s in scorer.score(ref, gen).items():
            r, d = _value(s)
            raw[m].append(r)
            dis[m].append(d)
        if halves is not None:
            for m, s in scorer.score(*halves).items():
                base[m].append(_value(s)[1])
    rows = []
    for m in metrics:
        row = {"metric": m, "trials": len(raw[m])}
        row["raw_mean"], row["raw_stderr"] = mean_stderr(raw[m])
        row["dissimilarity_mean"], row["dissimilarity_stderr"] = mean_stderr(dis[m])
        if halves is not None:
            row["baseline_mean"], row["baseline_stderr"] = mean_stderr(base[m])
        rows.append(row)
    return rows


COMPARE_COLUMNS = (
    "metric",
    "trials",
    "raw_mean",
    "raw_stderr",
    "dissimilarity_mean",
    "dissimilarity_stderr",
    "baseline_mean",
    "baseline_stderr",
)


def format_compare(rows: list[dict], fmt: str, header: str) -> str:
    cols = [c for c in COMPARE_COLUMNS if any(c in r for r in rows)]
    if fmt == "csv":
        buf = io.StringIO()
        buf.write(f"# {header}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([format(r[c], ".17g") if isinstance(r[c], float) else r[c] for c in cols])
        return buf.getvalue()
    lines = [header]
    for r in rows:
        text = f"{r['metric']:<15} {r['dissimilarity_mean']:.6g} ± {r['dissimilarity_stderr']:.2g}"
        text += f"  (raw {r['raw_mean']:.6g}, {r['trials']} trials)"
        if "baseline_mean" in r:
            text += f"  split baseline {r['baseline_mean']:.6g} ± {r['baseline_stderr']:.2g}"
        lines.append(text)
    return "\n".join(lines) + "\n"


def cmd_compare(args) -> int:
    ref, gen = _load(args.ref), _load(args.gen)
    if len(ref) == 0 or len(gen) == 0:
        raise DataError("both graph sets must be non-empty")
    metrics = _split_metrics(args.metrics) if args.metrics else default_metrics(len(ref), len(gen))
    gin = _gin_from_args(args)
    if args.seeds < 1:
        raise UsageError("--seeds must be >= 1")
    try:
        rows = compare_sets(ref, gen, metrics, gin, args.seeds, args.seed, args.k, args.baseline)
    except SchemaError as exc:
        raise DataError(str(exc)) from exc
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    cfg = gin
    header = (
        f"gin L={cfg.layers} d={cfg.dim} agg={cfg.aggregator} readout={cfg.readout} "
        f"concat={cfg.concat_layers}; trial i uses gin seed {args.seed}+i for i < {args.seeds}; "
        f"dissimilarity = 1 - score for similarity metrics"
    )
    _emit(format_compare(rows, args.format, header), args.out)
    return EXIT_OK


def _split_metrics(raw: str) -> list[str]:
    metrics = [m.strip() for m in raw.split(",") if m.strip()]
    try:
        return validate_metrics(metrics)
    except ValueError as exc:
        raise UsageError(f"{exc} (known: {', '.join(ALL_METRICS)})") from exc


# ---------------------------------------------------------------------------
# benchmark
# ---------------------------------------------------------------------------

def cmd_benchmark(args) -> int:
    try:
        sections = read_spec(args.spec)
    except OSError as exc:
        raise DataError(f"cannot read {args.spec}: {exc.strerror or exc}") from exc
    except SpecError as exc:
        raise UsageError(str(exc)) from exc
    out_dir = Path(args.out or ".")
    out_dir.mkdir(parents=True, exist_ok=True)
    total = ExperimentReport()
    for section in sections:
        report = ExperimentReport()
        for job in section.jobs:
            log.info("running %s: %s", section.name, job)
            if isinstance(job, ExperimentSpec):
                report.extend(run_rank_experiment(job))
            elif isinstance(job, EfficiencySpec):
                report.extend(run_sample_efficiency(job))
            else:
                report.extend(timing_suite(job))
        if section.kind == "timing":
            (out_dir / f"{section.name}.timings.csv").write_text(report.timings_csv(), encoding="utf-8")
        else:
            (out_dir / f"{section.name}.csv").write_text(report.to_csv(), encoding="utf-8")
        total.extend(report)
    summary = total.summary_table()
    (out_dir / "summary.txt").write_text(summary, encoding="utf-8")
    if not args.quiet:
        sys.stdout.write(summary)
    return EXIT_OK


# ---------------------------------------------------------------------------
# generate / embed
# ---------------------------------------------------------------------------

def cmd_generate(args) -> int:
    if args.count < 0:
        raise UsageError("--count must be >= 0")
    kwargs = {}
    if args.family == "er":
        if not 0.0 <= args.p <= 1.0 or args.n < 0:
            raise UsageError("er needs --n >= 0 and 0 <= --p <= 1")
        kwargs = {"n": args.n, "p": args.p}
    graphs = make_dataset(args.family, args.count, np.random.default_rng(args.seed), **kwargs)
    save_graphset(graphs, args.out)
    return EXIT_OK


def cmd_embed(args) -> int:
    graphs = _load(args.graphs)
    if len(graphs) == 0:
        raise DataError("graph set is empty")
    cfg = _gin_from_args(args).with_seed(args.seed)
    try:
        x = embed_set(graphs, init_weights(cfg, graphs.schema))
    except ValueError as exc:
        raise DataError(str(exc)) from exc
    write_matrix_csv(x, args.out)
    if args.pca is not None:
        if args.pca < 1:
            raise UsageError("--pca must be >= 1")
        pca_out = args.pca_out or str(Path(args.out).with_suffix("")) + ".pca.csv"
        write_matrix_csv(pca_project(x, args.pca), pca_out)
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_gin_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("random GIN")
    g.add_argument("--gin-layers", type=int, default=3, help="propagation rounds (default 3)")
    g.add_argument("--gin-dim", type=int, default=35, help="node embedding width (default 35)")
    g.add_argument("--agg", default="sum", choices=("sum", "mean", "max"), help="neighbour aggregation")
    g.add_argument("--readout", default="sum", choices=("sum", "mean", "max"), help="graph readout")
    g.add_argument("--no-concat", action="store_true", help="embed with the last round only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ggm-eval", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compare", help="score a generated graph set against a reference set")
    p.add_argument("--ref", required=True, help="reference graph set (JSON lines)")
    p.add_argument("--gen", required=True, help="generated graph set (JSON lines)")
    p.add_argument(
        "--metrics",
        help=f"comma-separated metric ids; default mmd_rbf if both sets have >= {MMD_RBF_MIN_SAMPLES} "
        "graphs, else f1_pr",
    )
    _add_gin_flags(p)
    p.add_argument("--seeds", type=int, default=10, help="number of random GIN initialisations")
    p.add_argument("--seed", type=int, default=0, help="first GIN seed")
    p.add_argument("--k", type=int, default=5, help="nearest neighbours for precision/recall/density/coverage")
    p.add_argument("--baseline", action="store_true", help="also score a 50/50 split of the reference set")
    p.add_argument("--out", help="output file (default stdout)")
    p.add_argument("--format", choices=("csv", "text"), default="text")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("benchmark", help="run the experiments of an INI spec file")
    p.add_argument("spec")
    p.add_argument("--out", help="output directory (default .)")
    p.add_argument("-q", "--quiet", action="store_true", help="do not print the summary table")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("generate", help="write a synthetic graph set")
    p.add_argument("family", choices=DATASET_FAMILIES)
    p.add_argument("--count", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, default=50, help="nodes per graph (er only)")
    p.add_argument("--p", type=float, default=0.1, help="edge probability (er only)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("embed", help="write random-GIN graph embeddings as CSV")
    p.add_argument("graphs")
    _add_gin_flags(p)
    p.add_argument("--seed", type=int, default=0, help="GIN seed")
    p.add_argument("--out", required=True)
    p.add_argument("--pca", type=int, help="also write a projection on this many principal components")
    p.add_argument("--pca-out", help="PCA output file (default <out>.pca.csv)")
    p.set_defaults(func=cmd_embed)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s"
    )
    try:
        return args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with status 2
    except DataError as exc:
        print(f"ggm-eval: error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
