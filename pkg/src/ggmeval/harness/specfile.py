"""INI experiment files: one section per job.

Example::

    [DEFAULT]
    seeds = 0-9
    metrics = mmd_rbf, f1_pr, degree_mmd

    [grid_fidelity]
    kind = rank
    experiment = rewiring, mixing
    datasets = grid
    gin_layers = 3
    gin_dim = 35

``kind`` is ``rank`` (default), ``sample_efficiency`` or ``timing``. List
values are comma separated; GIN keys accept lists and every combination is
run. Integer lists accept ``a-b`` ranges.
"""

from __future__ import annotations

import configparser
import itertools
from dataclasses import dataclass
from typing import Union

from ..embed import GinConfig
from .experiments import (
    DEFAULT_T_GRID,
    SAMPLE_EFFICIENCY_GRID,
    EfficiencySpec,
    ExperimentSpec,
)
from .timing import EDGES_SWEEP, NODES_SWEEP, SAMPLES_SWEEP, TimingSpec

KINDS = ("rank", "sample_efficiency", "timing")

Job = Union[ExperimentSpec, EfficiencySpec, TimingSpec]


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class Section:
    name: str
    kind: str
    jobs: tuple[Job, ...]


def _split(raw: str) -> list[str]:
    return [p.strip() for p in raw.split(",") if p.strip()]


def _ints(raw: str) -> list[int]:
    out = []
    for part in _split(raw):
        lo, sep, hi = part.partition("-")
        if sep and lo.strip():
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def _floats(raw: str) -> list[float]:
    return [float(p) for p in _split(raw)]


def _bools(raw: str) -> list[bool]:
    out = []
    for p in _split(raw):
        v = p.lower()
        if v not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
            raise SpecError(f"not a boolean: {p!r}")
        out.append(v in ("true", "yes", "1", "on"))
    return out


def _gin_configs(sec) -> tuple[GinConfig, ...]:
    base = GinConfig()
    layers = _ints(sec.get("gin_layers", str(base.layers)))
    dims = _ints(sec.get("gin_dim", str(base.dim)))
    aggs = _split(sec.get("agg", base.aggregator))
    readouts = _split(sec.get("readout", base.readout))
    concat = _bools(sec.get("concat", "true"))
    return tuple(
        GinConfig(layers=l, dim=d, aggregator=a, readout=r, concat_layers=c)
        for l, d, a, r, c in itertools.product(layers, dims, aggs, readouts, concat)
    )


def _section_jobs(name: str, sec) -> Section:
    kind = sec.get("kind", "rank").strip()
    if kind not in KINDS:
        raise SpecError(f"[{name}] unknown kind {kind!r}; expected one of {', '.join(KINDS)}")
    metrics = tuple(_split(sec.get("metrics", "")))
    if not metrics:
        raise SpecError(f"[{name}] metric list is empty")
    if kind == "timing":
        sweeps = {}
        defaults = {"samples": SAMPLES_SWEEP, "edges": EDGES_SWEEP, "nodes": NODES_SWEEP}
        for sweep in _split(sec.get("sweeps", "samples, edges, nodes")):
            if sweep not in defaults:
                raise SpecError(f"[{name}] unknown sweep {sweep!r}")
            key = f"{sweep}_values"
            sweeps[sweep] = tuple(_floats(sec[key])) if key in sec else defaults[sweep]
        budget = sec.get("budget_s")
        job = TimingSpec(
            sweeps=sweeps,
            metrics=metrics,
            gin=GinConfig(layers=int(sec.get("gin_layers", 7)), dim=int(sec.get("gin_dim", 20))),
            seed=int(sec.get("seed", 0)),
            budget_s=None if budget is None else float(budget),
        )
        return Section(name, kind, (job,))

    common = dict(
        dataset_size=int(sec.get("dataset_size", 100)),
        dataset_seed=int(sec.get("dataset_seed", 0)),
        metrics=metrics,
        gin_configs=_gin_configs(sec),
        seeds=tuple(_ints(sec.get("seeds", "0-9"))),
        k=int(sec.get("k", 5)),
    )
    datasets = _split(sec.get("datasets", "grid"))
    if kind == "sample_efficiency":
        grid = tuple(_ints(sec["grid"])) if "grid" in sec else SAMPLE_EFFICIENCY_GRID
        jobs = tuple(EfficiencySpec(dataset=d, grid=grid, **common) for d in datasets)
        return Section(name, kind, jobs)
    if "experiment" not in sec:
        raise SpecError(f"[{name}] rank sections need an 'experiment' key")
    t_grid = tuple(_floats(sec["t_grid"])) if "t_grid" in sec else DEFAULT_T_GRID
    jobs = tuple(
        ExperimentSpec(experiment=e, dataset=d, t_grid=t_grid, **common)
        for e in _split(sec["experiment"])
        for d in datasets
    )
    return Section(name, kind, jobs)


def parse_spec(text: str) -> list[Section]:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise SpecError(str(exc)) from exc
    if not parser.sections():
        raise SpecError("spec file defines no sections")
    sections = []
    for name in parser.sections():
        try:
            sections.append(_section_jobs(name, parser[name]))
        except SpecError:
            raise
        except (ValueError, KeyError) as exc:
            raise SpecError(f"[{name}] {exc}") from exc
    return sections


def read_spec(path) -> list[Section]:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())
