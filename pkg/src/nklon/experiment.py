"""Batch pipeline: instance grids, exhaustive analysis, CSV outputs."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
import platform
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .basins import BasinDistribution, basin_size_rows, exact_basin_distributions, monte_carlo_basins
from .errors import CapacityError, ParameterError
from .landscape import GENERATOR_NAME, ModelSpec, NkInstance, generate_instance, serialize_instance
from .lon import LocalOptimaNetwork, build_lon, dot, edge_list_csv, graphml
from .metrics import MetricsReport, compute_metrics, format_value, per_node_rows, weight_histogram
from .neutrality import NeutralPartition, neutral_partition

log = logging.getLogger(__name__)

DESK_LIMIT = 14
WORKERS_ENV = "NKLON_WORKERS"


@dataclass
class Analysis:
    inst: NkInstance
    part: NeutralPartition
    dist: BasinDistribution
    lon: LocalOptimaNetwork
    report: MetricsReport


def analyze_instance(
    inst: NkInstance,
    mode: str = "exact",
    samples: int = 1000,
    mc_seed: int = 0,
    optimum_ties: str = "all",
) -> Analysis:
    part = neutral_partition(inst)
    if mode == "exact":
        dist = exact_basin_distributions(inst, part)
    elif mode in ("mc", "monte-carlo"):
        dist = monte_carlo_basins(inst, part, samples, mc_seed)
    else:
        raise ParameterError(f"unknown analysis mode {mode!r}")
    lon = build_lon(inst, part, dist, optimum_ties=optimum_ties)
    return Analysis(inst, part, dist, lon, compute_metrics(lon, inst.spec))


@dataclass(frozen=True)
class Cell:
    model: str
    param: float | int | None
    k: int

    @property
    def key(self) -> str:
        p = "" if self.param is None else f"-{self.param:g}" if isinstance(self.param, float) else f"-{self.param}"
        return f"{self.model}{p}-k{self.k}"


def cell_seed(base_seed: int, n: int, cell: Cell, index: int) -> int:
    """Seed of instance ``index`` in ``cell``; depends only on these arguments."""
    tag = zlib.crc32(f"{cell.model}|{cell.param}|{n}|{cell.k}".encode())
    state = np.random.SeedSequence(base_seed, spawn_key=(tag, index)).generate_state(2, np.uint32)
    return int(state.view(np.uint64)[0])


@dataclass
class ExperimentPlan:
    models: list[tuple[str, float | int | None]]
    ks: list[int]
    n: int
    instances: int
    base_seed: int = 0
    out_dir: str = "results"
    mode: str = "exact"
    samples: int = 1000
    neighborhood: str = "random"
    exports: bool = False
    per_node: bool = False
    force: bool = False
    optimum_ties: str = "all"

    def cells(self) -> list[Cell]:
        return [Cell(m, p, k) for m, p in self.models for k in self.ks]

    def validate(self) -> None:
        if self.instances < 1:
            raise ParameterError("instances must be >= 1")
        for cell in self.cells():
            ModelSpec(cell.model, self.n, cell.k, cell.param, self.neighborhood, 0)
        if self.n > DESK_LIMIT and self.mode == "exact" and not self.force:
            raise CapacityError(
                f"n={self.n} exceeds the desk-scale limit of {DESK_LIMIT} in exact mode; pass --force"
            )


def _csv_text(header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _write_atomic(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".partial")
    tmp.write_text(text)
    os.replace(tmp, path)


METRIC_HEADER = ["instance_id"] + MetricsReport.columns()


def _run_one(job) -> tuple[list[str], float]:
    plan, cell, index, out = job
    t0 = time.perf_counter()
    spec = ModelSpec(cell.model, plan.n, cell.k, cell.param, plan.neighborhood, cell_seed(plan.base_seed, plan.n, cell, index))
    inst = generate_instance(spec)
    iid = f"{cell.key}-{index:03d}"
    res = analyze_instance(inst, plan.mode, plan.samples, mc_seed=spec.seed, optimum_ties=plan.optimum_ties)
    inst_dir = out / "instances" / cell.key
    _write_atomic(inst_dir / f"{iid}.json", serialize_instance(inst))
    if plan.exports:
        lon_dir = out / "lon" / cell.key
        _write_atomic(lon_dir / f"{iid}.edges.csv", edge_list_csv(res.lon))
        _write_atomic(lon_dir / f"{iid}.graphml", graphml(res.lon))
        _write_atomic(lon_dir / f"{iid}.dot", dot(res.lon))
        _write_atomic(
            lon_dir / f"{iid}.basins.csv",
            _csv_text(["lonn_id", "fitness", "size"], [list(map(str, r)) for r in basin_size_rows(res.dist, res.part, inst)]),
        )
        counts, edges = weight_histogram(res.lon)
        _write_atomic(
            lon_dir / f"{iid}.weights_hist.csv",
            _csv_text(["lo", "hi", "count"], [[repr(float(a)), repr(float(b)), str(int(c))] for a, b, c in zip(edges[:-1], edges[1:], counts)]),
        )
    if plan.per_node:
        _write_atomic(
            out / "lon" / cell.key / f"{iid}.nodes.csv",
            _csv_text(["node", "fitness", "basin_size", "cw", "y2"], per_node_rows(res.lon)),
        )
    return [iid] + res.report.row(), time.perf_counter() - t0


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise ParameterError(f"{WORKERS_ENV} must be an integer") from None


def orchestrate(plan: ExperimentPlan, workers: int | None = None) -> Path:
    """Run every cell of ``plan``; cells with a finished CSV are skipped."""
    plan.validate()
    out = Path(plan.out_dir)
    (out / "cells").mkdir(parents=True, exist_ok=True)
    workers = worker_count() if workers is None else workers
    timings: dict[str, float] = {}
    seeds: dict[str, list[int]] = {}

    for cell in plan.cells():
        seeds[cell.key] = [cell_seed(plan.base_seed, plan.n, cell, i) for i in range(plan.instances)]
        done = out / "cells" / f"{cell.key}.csv"
        partial = done.with_name(done.name + ".partial")
        if partial.exists():
            log.warning("discarding partial output for cell %s", cell.key)
            partial.unlink()
        if done.exists():
            with done.open() as fh:
                n_rows = sum(1 for _ in fh) - 1
            if n_rows == plan.instances:
                log.info("cell %s already complete, skipping", cell.key)
                continue
            log.warning("cell %s has %d of %d rows, recomputing", cell.key, n_rows, plan.instances)
        (out / "instances" / cell.key).mkdir(parents=True, exist_ok=True)
        if plan.exports or plan.per_node:
            (out / "lon" / cell.key).mkdir(parents=True, exist_ok=True)
        jobs = [(plan, cell, i, out) for i in range(plan.instances)]
        t0 = time.perf_counter()
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                results = list(pool.map(_run_one, jobs))
        else:
            results = [_run_one(j) for j in jobs]
        timings[cell.key] = time.perf_counter() - t0
        log.info("cell %s: %d instances in %.1fs", cell.key, plan.instances, timings[cell.key])
        _write_atomic(done, _csv_text(METRIC_HEADER, [r for r, _ in results]))

    rows = []
    for cell in plan.cells():
        with (out / "cells" / f"{cell.key}.csv").open(newline="") as fh:
            rows.extend(list(csv.reader(fh))[1:])
    _write_atomic(out / "metrics.csv", _csv_text(METRIC_HEADER, rows))
    _write_atomic(out / "aggregate.csv", aggregate_text(out / "metrics.csv"))
    _write_manifest(out, plan, seeds, timings)
    return out


NUMERIC_SKIP = {"instance_id", "model", "n", "k", "param", "seed"}


def _mean_sd(values: list[float]) -> tuple[str, str]:
    if not values:
        return "", ""
    mean = math.fsum(values) / len(values)
    if len(values) < 2:
        return repr(mean), ""
    var = math.fsum((v - mean) ** 2 for v in values) / (len(values) - 1)
    return repr(mean), repr(math.sqrt(var))


def aggregate_rows(rows: list[dict[str, str]]) -> tuple[list[str], list[list[str]]]:
    """Per-cell mean and sample standard deviation of every numeric column.

    Blank entries (undefined metrics) are left out of that column's mean.
    """
    if not rows:
        return [], []
    metric_cols = [c for c in rows[0] if c not in NUMERIC_SKIP]
    header = ["model", "param", "n", "k", "count"]
    for c in metric_cols:
        header += [f"{c}_mean", f"{c}_sd"]
    groups: dict[tuple, list[dict[str, str]]] = {}
    for r in rows:
        groups.setdefault((r["model"], r["param"], r["n"], r["k"]), []).append(r)
    out = []
    for key, members in groups.items():
        line = list(key) + [str(len(members))]
        for c in metric_cols:
            line += list(_mean_sd([float(m[c]) for m in members if m[c] != ""]))
        out.append(line)
    return header, out


def aggregate_text(metrics_csv: Path | str) -> str:
    with open(metrics_csv, newline="") as fh:
        rows = list(csv.DictReader(fh))
    header, out = aggregate_rows(rows)
    return _csv_text(header, out)


def _write_manifest(out: Path, plan: ExperimentPlan, seeds: dict, timings: dict) -> None:
    manifest = {
        "artifact": "nklon",
        "version": __version__,
        "prng": GENERATOR_NAME,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "plan": {**asdict(plan), "models": [list(m) for m in plan.models]},
        "seeds": seeds,
        "wall_clock_seconds": timings,
    }
    _write_atomic(out / "manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


# -- EA campaigns -----------------------------------------------------------------

EA_HEADER = ["instance_id", "model", "n", "k", "param", "mutation", "crossover", "runs", "success_rate"]


@dataclass
class EaPlan:
    models: list[tuple[str, float | int | None]]
    ks: list[int]
    n: int
    instances: int
    runs: int = 100
    base_seed: int = 0
    neighborhood: str = "random"
    mutation_factor: float | None = None  # None: tune per cell
    crossover_rate: float | None = None
    tune_runs: int = 100
    tune_instances: int = 30
    ea_options: dict = field(default_factory=dict)


def run_ea_campaign(plan: EaPlan) -> tuple[list[list[str]], dict[str, tuple[float, float]]]:
    """Success rate of each instance of each cell.

    Returns CSV rows and the (mutation factor, crossover) pair used per cell.
    """
    from .ea import EaConfig, grid_tune, success_rate
    from .landscape import global_max

    rows = []
    chosen = {}
    for model, param in plan.models:
        for k in plan.ks:
            cell = Cell(model, param, k)
            if plan.mutation_factor is None or plan.crossover_rate is None:
                tuned = grid_tune(
                    model, param, plan.n, k, plan.tune_runs, plan.tune_instances,
                    seed=cell_seed(plan.base_seed + 1, plan.n, cell, 0),
                    neighborhood=plan.neighborhood, **plan.ea_options,
                )
                factor, cross = tuned.mutation_factor, tuned.crossover_rate
            else:
                factor, cross = plan.mutation_factor, plan.crossover_rate
            chosen[cell.key] = (factor, cross)
            for i in range(plan.instances):
                seed = cell_seed(plan.base_seed, plan.n, cell, i)
                inst = generate_instance(ModelSpec(model, plan.n, k, param, plan.neighborhood, seed))
                cfg = EaConfig.from_factor(plan.n, factor, cross, seed=seed, **plan.ea_options)
                rate = success_rate(inst, global_max(inst), cfg, plan.runs)
                rows.append([
                    f"{cell.key}-{i:03d}", model, str(plan.n), str(k), format_value(param),
                    format_value(factor / plan.n), format_value(cross), str(plan.runs), format_value(rate),
                ])
    return rows, chosen


def write_ea_results(path: Path | str, rows: list[list[str]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    _write_atomic(path, _csv_text(EA_HEADER, rows))
