"""Experiment grid orchestration: config parsing, cell execution, reports.

A config spans datasets x K values x blocks x methods x seeds.  Every cell
is identified by a hash of its full settings; finished cells persist as
one-line journal files so interrupted grids resume without recomputation,
and the assembled CSVs are byte-identical across executions of the same
config.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import configparser
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .ansatz import BLOCK_KINDS, CircuitSpec, n_wires_for_classes
from .data import load_idx, reduce_and_scale, select_classes
from .simplex import training_simplex
from .tempering import FUNCTIONS, make_tempering, temper_grad
from .training import (OptimizerConfig, eval_constant, eval_threshold,
                       eval_valid_sampling, friedman_rank, train, win_rate)

SCHEMA_COMMENT = "# simplexvqc results schema v1"
RESULT_COLUMNS = ("dataset", "k", "block", "method", "seed", "n_params",
                  "c_m", "a_m", "v_m", "s_count", "t_acc", "l_r", "run_id")
METRIC_COLUMNS = ("c_m", "a_m", "v_m", "s_count", "t_acc", "l_r")
METRIC_DIRECTIONS = {"c_m": "higher", "a_m": "higher", "v_m": "higher",
                     "s_count": "lower", "t_acc": "higher", "l_r": "higher"}


@dataclass
class DatasetPaths:
    name: str
    train_images: str
    train_labels: str
    test_images: str
    test_labels: str


@dataclass
class ExperimentConfig:
    datasets: list
    k_values: list
    blocks: list
    methods: list
    seeds: list
    n_layers: int = 4
    tempering_function: str = "erf"
    min_grad: float = 0.01
    optimizer: str = "adam"
    lr0: float = 0.01
    scheduler: str = "exponential"
    batch_size: int = 32
    epochs: int = 6
    shots: int = 100
    alpha: float = 0.001
    per_class_cap: int | None = None
    test_per_class_cap: int | None = None
    output_dir: str = "results"

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("config error at grid.seeds: need at least one seed")
        for block in self.blocks:
            if block not in BLOCK_KINDS:
                raise ValueError(f"config error at grid.blocks: unknown block {block!r}")
        for method in self.methods:
            if method not in ("edge", "vertex"):
                raise ValueError(f"config error at grid.methods: unknown method {method!r}")
        if self.tempering_function not in FUNCTIONS:
            raise ValueError("config error at tempering.function: "
                             f"unknown function {self.tempering_function!r}")
        for k in self.k_values:
            if k < 3:
                raise ValueError("config error at grid.k: K must be >= 3")


def _parse_list(raw, cast):
    return [cast(tok.strip()) for tok in raw.split(",") if tok.strip()]


def parse_config(text):
    """Parse the INI-style experiment config into an ExperimentConfig."""
    cp = configparser.ConfigParser()
    cp.read_string(text)
    datasets = []
    for section in cp.sections():
        if section.startswith("dataset."):
            name = section.split(".", 1)[1]
            datasets.append(DatasetPaths(
                name,
                cp.get(section, "train_images"),
                cp.get(section, "train_labels"),
                cp.get(section, "test_images"),
                cp.get(section, "test_labels"),
            ))
    if not datasets:
        raise ValueError("config error: need at least one [dataset.NAME] section")
    datasets.sort(key=lambda d: d.name)
    grid = cp["grid"]
    cfg = ExperimentConfig(
        datasets=datasets,
        k_values=_parse_list(grid.get("k", "3"), int),
        blocks=_parse_list(grid.get("blocks", "CNN7"), str),
        methods=_parse_list(grid.get("methods", "edge,vertex"), str),
        seeds=_parse_list(grid.get("seeds", "0"), int),
        n_layers=cp.getint("circuit", "layers", fallback=4),
        tempering_function=cp.get("tempering", "function", fallback="erf"),
        min_grad=cp.getfloat("tempering", "min_grad", fallback=0.01),
        optimizer=cp.get("optimizer", "kind", fallback="adam"),
        lr0=cp.getfloat("optimizer", "lr0", fallback=0.01),
        scheduler=cp.get("optimizer", "scheduler", fallback="exponential"),
        batch_size=cp.getint("optimizer", "batch_size", fallback=32),
        epochs=cp.getint("optimizer", "epochs", fallback=6),
        shots=cp.getint("sampling", "shots", fallback=100),
        alpha=cp.getfloat("sampling", "alpha", fallback=0.001),
        per_class_cap=cp.getint("data", "train_per_class", fallback=None),
        test_per_class_cap=cp.getint("data", "test_per_class", fallback=None),
        output_dir=cp.get("output", "directory", fallback="results"),
    )
    return cfg


def serialize_config(cfg):
    """Canonical text form; parse(serialize(cfg)) round-trips exactly."""
    out = io.StringIO()
    for ds in sorted(cfg.datasets, key=lambda d: d.name):
        out.write(f"[dataset.{ds.name}]\n")
        out.write(f"train_images = {ds.train_images}\n")
        out.write(f"train_labels = {ds.train_labels}\n")
        out.write(f"test_images = {ds.test_images}\n")
        out.write(f"test_labels = {ds.test_labels}\n\n")
    out.write("[grid]\n")
    out.write(f"k = {','.join(str(k) for k in cfg.k_values)}\n")
    out.write(f"blocks = {','.join(cfg.blocks)}\n")
    out.write(f"methods = {','.join(cfg.methods)}\n")
    out.write(f"seeds = {','.join(str(s) for s in cfg.seeds)}\n\n")
    out.write(f"[circuit]\nlayers = {cfg.n_layers}\n\n")
    out.write(f"[tempering]\nfunction = {cfg.tempering_function}\n"
              f"min_grad = {cfg.min_grad!r}\n\n")
    out.write(f"[optimizer]\nkind = {cfg.optimizer}\nlr0 = {cfg.lr0!r}\n"
              f"scheduler = {cfg.scheduler}\nbatch_size = {cfg.batch_size}\n"
              f"epochs = {cfg.epochs}\n\n")
    out.write(f"[sampling]\nshots = {cfg.shots}\nalpha = {cfg.alpha!r}\n\n")
    out.write("[data]\n")
    if cfg.per_class_cap is not None:
        out.write(f"train_per_class = {cfg.per_class_cap}\n")
    if cfg.test_per_class_cap is not None:
        out.write(f"test_per_class = {cfg.test_per_class_cap}\n")
    out.write(f"\n[output]\ndirectory = {cfg.output_dir}\n")
    return out.getvalue()


@dataclass(frozen=True)
class Cell:
    dataset: str
    k: int
    block: str
    method: str
    seed: int


def grid_cells(cfg):
    """All cells in canonical order (dataset, K, block, method, seed)."""
    return [Cell(ds.name, k, block, method, seed)
            for ds in cfg.datasets
            for k in cfg.k_values
            for block in cfg.blocks
            for method in cfg.methods
            for seed in cfg.seeds]


def _cell_settings(cfg, cell):
    return {
        "alpha": cfg.alpha, "batch_size": cfg.batch_size, "block": cell.block,
        "dataset": cell.dataset, "epochs": cfg.epochs, "k": cell.k,
        "layers": cfg.n_layers, "lr0": cfg.lr0, "method": cell.method,
        "min_grad": cfg.min_grad, "optimizer": cfg.optimizer,
        "per_class_cap": cfg.per_class_cap, "scheduler": cfg.scheduler,
        "seed": cell.seed, "shots": cfg.shots,
        "tempering": cfg.tempering_function,
        "test_per_class_cap": cfg.test_per_class_cap,
    }


def run_id(cfg, cell):
    """Stable identity of one grid cell: hash of its full settings."""
    blob = json.dumps(_cell_settings(cfg, cell), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@lru_cache(maxsize=8)
def _load_raw(train_images, train_labels, test_images, test_labels):
    return (load_idx(train_images, train_labels),
            load_idx(test_images, test_labels))


def _format_value(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def compute_cell(cfg, cell):
    """Train and evaluate one grid cell; returns (row dict, artifacts)."""
    paths = next(d for d in cfg.datasets if d.name == cell.dataset)
    raw_train, raw_test = _load_raw(paths.train_images, paths.train_labels,
                                    paths.test_images, paths.test_labels)
    sub_train = select_classes(raw_train, cell.k, cell.seed, cfg.per_class_cap)
    sub_test = select_classes(raw_test, cell.k, cell.seed, cfg.test_per_class_cap)
    n_wires = n_wires_for_classes(cell.k)
    reduced = reduce_and_scale(sub_train, sub_test, n_wires)
    geom = training_simplex(cell.k)
    tempering = make_tempering(cfg.tempering_function, cfg.min_grad)
    spec = CircuitSpec(cell.k, cell.block, None, cfg.n_layers)
    opt = OptimizerConfig(kind=cfg.optimizer, lr0=cfg.lr0,
                          scheduler=cfg.scheduler, batch_size=cfg.batch_size,
                          epochs=cfg.epochs, seed=cell.seed)
    result = train(spec, reduced.train_x, reduced.train_y, cell.method,
                   tempering, opt, geom)
    constant = eval_constant(result.spec, reduced.test_x, reduced.test_labels,
                             cell.method, shots=cfg.shots, seed=cell.seed,
                             geom=geom)
    valid = eval_valid_sampling(result.spec, reduced.test_x,
                                reduced.test_labels, cell.method,
                                alpha=cfg.alpha, seed=cell.seed, geom=geom)
    threshold = eval_threshold(result.spec, reduced.test_x,
                               reduced.test_labels, cell.method, tempering,
                               geom)
    row = {
        "dataset": cell.dataset, "k": cell.k, "block": cell.block,
        "method": cell.method, "seed": cell.seed,
        "n_params": result.spec.n_params,
        "c_m": constant.c_m, "a_m": constant.a_m,
        "v_m": valid.v_m, "s_count": valid.s_count,
        "t_acc": threshold.t_acc, "l_r": threshold.l_r,
        "run_id": run_id(cfg, cell),
    }
    artifacts = {
        "grad_totals": result.grad_totals,
        "plurality": constant.plurality,
        "macro": constant.macro,
        "valid_matrix": valid.matrix,
    }
    return row, artifacts


def _atomic_write(path, data):
    tmp = Path(str(path) + ".tmp")
    mode = "wb" if isinstance(data, bytes) else "w"
    with open(tmp, mode) as f:
        f.write(data)
    os.replace(tmp, path)


def _write_matrix_csv(path, matrix):
    lines = [",".join(_format_value(v) for v in row) for row in matrix]
    _atomic_write(path, "\n".join(lines) + "\n")


def _row_line(row):
    return ",".join(_format_value(row[c]) for c in RESULT_COLUMNS)


def _execute_cell(args):
    cfg, cell, out_dir = args
    rid = run_id(cfg, cell)
    row, artifacts = compute_cell(cfg, cell)
    grads = artifacts["grad_totals"]
    grad_lines = ["parameter_index,total"]
    grad_lines += [f"{i},{_format_value(float(g))}" for i, g in enumerate(grads)]
    _atomic_write(out_dir / "grads" / f"{rid}.csv", "\n".join(grad_lines) + "\n")
    _write_matrix_csv(out_dir / "conf" / f"{rid}_plurality.csv",
                      artifacts["plurality"])
    _write_matrix_csv(out_dir / "conf" / f"{rid}_macro.csv", artifacts["macro"])
    _write_matrix_csv(out_dir / "conf" / f"{rid}_valid.csv",
                      artifacts["valid_matrix"])
    _atomic_write(out_dir / "cells" / f"{rid}.json",
                  json.dumps(row, sort_keys=True) + "\n")
    return row


def _matches_filter(cell, cell_filter):
    if not cell_filter:
        return True
    for key, wanted in cell_filter.items():
        value = str(getattr(cell, key))
        if value not in wanted:
            return False
    return True


@dataclass
class GridResult:
    rows: list
    failures: list = field(default_factory=list)

    @property
    def all_ok(self):
        return not self.failures


def run_grid(cfg, jobs=1, cell_filter=None, resume=True, log=print):
    """Execute the configured grid and write all report files.

    Finished cells are journaled under cells/<run_id>.json and skipped on
    resume; results.csv and the aggregate files are rebuilt in canonical
    cell order, so two executions of one config produce identical bytes.
    """
    out_dir = Path(cfg.output_dir)
    for sub in ("cells", "grads", "conf", "plots"):
        (out_dir / sub).mkdir(parents=True, exist_ok=True)
    cells = [c for c in grid_cells(cfg) if _matches_filter(c, cell_filter)]
    rows = {}
    pending = []
    for cell in cells:
        journal = out_dir / "cells" / f"{run_id(cfg, cell)}.json"
        if resume and journal.exists():
            with open(journal) as f:
                rows[cell] = json.loads(f.read())
        else:
            pending.append(cell)
    log(f"grid: {len(cells)} cells requested, {len(rows)} already complete, "
        f"{len(pending)} to run")
    failures = []
    if jobs > 1 and len(pending) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_execute_cell, (cfg, cell, out_dir)): cell
                       for cell in pending}
            for future in concurrent.futures.as_completed(futures):
                cell = futures[future]
                try:
                    rows[cell] = future.result()
                    log(f"done {cell}")
                except Exception as exc:
                    failures.append((cell, str(exc)))
                    log(f"FAILED {cell}: {exc}")
    else:
        for cell in pending:
            try:
                rows[cell] = _execute_cell((cfg, cell, out_dir))
                log(f"done {cell}")
            except Exception as exc:
                failures.append((cell, str(exc)))
                log(f"FAILED {cell}: {exc}")
    ordered = [rows[c] for c in cells if c in rows]
    _write_results_csv(out_dir / "results.csv", ordered)
    _write_aggregates(out_dir, ordered)
    emit_plot_data(out_dir, cfg, ordered)
    return GridResult(ordered, failures)


def _write_results_csv(path, ordered_rows):
    lines = [SCHEMA_COMMENT, ",".join(RESULT_COLUMNS)]
    lines += [_row_line(r) for r in ordered_rows]
    _atomic_write(path, "\n".join(lines) + "\n")


def _group_rows(rows, keys):
    groups = {}
    for row in rows:
        groups.setdefault(tuple(row[k] for k in keys), []).append(row)
    return groups


def _write_aggregates(out_dir, rows):
    # Per-cell mean and standard error over seeds.
    lines = [SCHEMA_COMMENT, "dataset,k,block,method,n_seeds," +
             ",".join(f"{m}_mean,{m}_sem" for m in METRIC_COLUMNS)]
    for key, group in sorted(_group_rows(rows, ("dataset", "k", "block",
                                                "method")).items()):
        vals = []
        for metric in METRIC_COLUMNS:
            data = np.array([r[metric] for r in group], dtype=np.float64)
            sem = data.std(ddof=1) / math.sqrt(data.size) if data.size > 1 else 0.0
            vals += [repr(float(data.mean())), repr(float(sem))]
        lines.append(",".join(map(str, key)) + f",{len(group)}," + ",".join(vals))
    _atomic_write(out_dir / "aggregate.csv", "\n".join(lines) + "\n")

    # Edge-vs-vertex win rates over blocks (per-block seed means) and the
    # Friedman rank of the methods over every (dataset, K, metric) row.
    win_lines = [SCHEMA_COMMENT, "dataset,k,metric,r_edge,r_vertex"]
    frame = {}
    for key, group in _group_rows(rows, ("dataset", "k", "block",
                                         "method")).items():
        dataset, k, block, method = key
        for metric in METRIC_COLUMNS:
            frame[(dataset, k, block, method, metric)] = float(
                np.mean([r[metric] for r in group]))
    datasets = sorted({r["dataset"] for r in rows})
    ks = sorted({r["k"] for r in rows})
    blocks = sorted({r["block"] for r in rows})
    methods = sorted({r["method"] for r in rows})
    fr_rows, fr_dirs = [], []
    for dataset in datasets:
        for k in ks:
            for metric in METRIC_COLUMNS:
                if {"edge", "vertex"} <= set(methods):
                    edge_scores, vertex_scores = [], []
                    for block in blocks:
                        e = frame.get((dataset, k, block, "edge", metric))
                        v = frame.get((dataset, k, block, "vertex", metric))
                        if e is not None and v is not None:
                            edge_scores.append(e)
                            vertex_scores.append(v)
                    if edge_scores:
                        r_e, r_v = win_rate(edge_scores, vertex_scores,
                                            METRIC_DIRECTIONS[metric])
                        win_lines.append(f"{dataset},{k},{metric},"
                                         f"{repr(r_e)},{repr(r_v)}")
                per_method = [frame.get((dataset, k, block, m, metric))
                              for m in methods for block in blocks[:1]]
                row = []
                for m in methods:
                    vals = [frame[(dataset, k, b, m, metric)] for b in blocks
                            if (dataset, k, b, m, metric) in frame]
                    if vals:
                        row.append(float(np.mean(vals)))
                if len(row) == len(methods) and row:
                    fr_rows.append(row)
                    fr_dirs.append(METRIC_DIRECTIONS[metric])
    _atomic_write(out_dir / "winrates.csv", "\n".join(win_lines) + "\n")
    fr_lines = [SCHEMA_COMMENT, "method,f_rank"]
    if fr_rows:
        ranks = friedman_rank(np.array(fr_rows), fr_dirs)
        for method, rank in zip(methods, ranks):
            fr_lines.append(f"{method},{repr(float(rank))}")
    _atomic_write(out_dir / "friedman.csv", "\n".join(fr_lines) + "\n")


def emit_plot_data(out_dir, cfg, rows):
    """Write plot-ready series: per-parameter gradient totals per run cell,
    confusion heat data (mean and standard error over seeds), and the
    tempering derivative curves."""
    out_dir = Path(out_dir)
    plots = out_dir / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    # Mean gradient totals over seeds, per (dataset, k, block, method).
    for key, group in sorted(_group_rows(rows, ("dataset", "k", "block",
                                                "method")).items()):
        stacks = []
        for row in group:
            path = out_dir / "grads" / f'{row["run_id"]}.csv'
            if path.exists():
                data = np.loadtxt(path, delimiter=",", skiprows=1)
                stacks.append(np.atleast_2d(data)[:, 1])
        if not stacks:
            continue
        mean = np.mean(np.stack(stacks), axis=0)
        name = "grads_{}_k{}_{}_{}.csv".format(*key)
        lines = ["parameter_index,mean_total"]
        lines += [f"{i},{repr(float(g))}" for i, g in enumerate(mean)]
        _atomic_write(plots / name, "\n".join(lines) + "\n")
    # Confusion heat data: per-cell mean and standard error over seeds.
    for key, group in sorted(_group_rows(rows, ("dataset", "k",
                                                "method")).items()):
        dataset, k, method = key
        mats = []
        for row in group:
            path = out_dir / "conf" / f'{row["run_id"]}_plurality.csv'
            if path.exists():
                mats.append(np.loadtxt(path, delimiter=",", ndmin=2))
        if not mats:
            continue
        stack = np.stack(mats)
        mean = stack.mean(axis=0)
        sem = (stack.std(axis=0, ddof=1) / math.sqrt(stack.shape[0])
               if stack.shape[0] > 1 else np.zeros_like(mean))
        lines = ["row,col,mean,sem"]
        for r in range(mean.shape[0]):
            for c in range(mean.shape[1]):
                lines.append(f"{r},{c},{repr(float(mean[r, c]))},"
                             f"{repr(float(sem[r, c]))}")
        _atomic_write(plots / f"confusion_{dataset}_k{k}_{method}.csv",
                      "\n".join(lines) + "\n")
    # Tempering derivative magnitude curves.
    xs = np.linspace(-1.0, 1.0, 401)
    curves = {}
    for function in ("logistic", "erf", "gudermannian"):
        config = make_tempering(function, cfg.min_grad)
        curves[function] = np.abs(temper_grad(config, xs))
    curves["linear"] = np.abs(temper_grad(make_tempering("linear"), xs))
    lines = ["x," + ",".join(curves)]
    for i, x in enumerate(xs):
        lines.append(repr(float(x)) + "," +
                     ",".join(repr(float(curves[f][i])) for f in curves))
    _atomic_write(plots / "tempering_curves.csv", "\n".join(lines) + "\n")


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="simplexvqc-run",
        description="Run a train/eval grid over datasets, class counts, "
                    "circuit blocks, output codecs, and seeds.")
    parser.add_argument("config", help="path to the experiment config file")
    parser.add_argument("--output", help="override the output directory")
    parser.add_argument("--jobs", type=int, default=1,
                        help="parallel worker processes (default 1)")
    parser.add_argument("--filter", action="append", default=[],
                        metavar="KEY=V1|V2",
                        help="restrict cells, e.g. --filter k=3 "
                             "--filter block=CNN7|SU4")
    parser.add_argument("--no-resume", action="store_true",
                        help="recompute cells even if journaled")
    args = parser.parse_args(argv)
    with open(args.config) as f:
        cfg = parse_config(f.read())
    if args.output:
        cfg = replace(cfg, output_dir=args.output)
    cell_filter = {}
    for item in args.filter:
        if "=" not in item:
            parser.error(f"bad --filter {item!r}, expected KEY=VALUE")
        key, _, value = item.partition("=")
        if key not in ("dataset", "k", "block", "method", "seed"):
            parser.error(f"unknown filter key {key!r}")
        cell_filter[key] = set(value.split("|"))
    result = run_grid(cfg, jobs=args.jobs, cell_filter=cell_filter,
                      resume=not args.no_resume)
    if not result.all_ok:
        for cell, err in result.failures:
            print(f"failed: {cell}: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
