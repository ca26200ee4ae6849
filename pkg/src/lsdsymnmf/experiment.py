"""Seeded experiment harness: repetitions, ablations and grids.

A master seed fans out through ``numpy.random.SeedSequence`` spawn keys:
repetition ``i`` fits with the seed drawn from key ``(i,)`` and its spectral
runs use keys ``(i, s)``.  Modes and grid cells reuse the same keys, so runs
are paired across them.
"""
from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field, asdict, replace
import hashlib
import itertools
import json
import os
import time

import numpy as np

from .datasets import load_dataset
from .graph import correct_rate, slices_from_data
from .metrics import acc, nmi
from .postcluster import augment, kmeans, spectral_embedding
from .solver import MODES, SolverConfig, fit

RUN_FIELDS = (
    "mode", "cell", "rep", "seed", "acc", "nmi", "iterations", "exit_reason",
    "coupled", "final_loss", "wall_time", "config",
)
LOSS_FIELDS = ("mode", "cell", "rep", "seed", "iteration", "loss", "delta")
CURVE_FIELDS = ("mode", "cell", "rep", "seed", "k", "correct_rate", "w_k", "p_k")
GRID_KEYS = ("alpha", "beta", "mu")


@dataclass
class ExperimentSpec:
    dataset: str
    config: SolverConfig
    format: str = "csv-features-label-last"
    reps: int = 20
    spectral_reps: int = 20
    master_seed: int = 0
    scale_rank: int = 7
    out: str = "results"
    grid: dict = field(default_factory=dict)
    workers: int = 1

    def __post_init__(self):
        if self.reps < 1 or self.spectral_reps < 1:
            raise ValueError("reps and spectral_reps must be >= 1")
        for key, values in self.grid.items():
            if key not in GRID_KEYS:
                raise ValueError("grid key %r not in %s" % (key, GRID_KEYS))
            if not values or any(v <= 0 for v in values):
                raise ValueError("grid values for %s must be a non-empty list of positives" % key)


@dataclass
class RunRecord:
    rep: int
    seed: int
    config: dict
    acc: float
    nmi: float
    iterations: int
    exit_reason: str
    wall_time: float
    coupled: bool
    w: np.ndarray
    p: np.ndarray
    loss_trace: list
    delta_trace: list
    correct_rate: np.ndarray = None
    cell: str = ""

    @property
    def mode(self):
        return self.config["mode"]

    def row(self):
        return {
            "mode": self.mode,
            "cell": self.cell,
            "rep": self.rep,
            "seed": self.seed,
            "acc": repr(self.acc),
            "nmi": repr(self.nmi),
            "iterations": self.iterations,
            "exit_reason": self.exit_reason,
            "coupled": int(self.coupled),
            "final_loss": repr(self.loss_trace[-1]),
            "wall_time": "%.6f" % self.wall_time,
            "config": json.dumps(self.config, sort_keys=True),
        }


def rep_seed(master_seed, rep):
    return int(np.random.SeedSequence(master_seed, spawn_key=(rep,)).generate_state(1)[0])


def spectral_seed(master_seed, rep, s):
    return int(np.random.SeedSequence(master_seed, spawn_key=(rep, s)).generate_state(1)[0])


def evaluate_state(state, labels, r, seeds):
    """Mean ACC and NMI of spectral clustering over the given k-means seeds."""
    E = spectral_embedding(augment(state.S, state.D, state.V), r)
    scores = []
    for s in seeds:
        pred = kmeans(E, r, s)
        scores.append((acc(pred, labels), nmi(pred, labels)))
    return tuple(float(x) for x in np.mean(scores, axis=0))


def run_single(slices, labels, config, rep, master_seed, spectral_reps, cell=""):
    seed = rep_seed(master_seed, rep)
    cfg = replace(config, seed=seed)
    t0 = time.perf_counter()
    state = fit(slices, cfg)
    seeds = [spectral_seed(master_seed, rep, s) for s in range(spectral_reps)]
    a, m = evaluate_state(state, labels, cfg.r, seeds)
    return RunRecord(
        rep=rep,
        seed=seed,
        config=asdict(cfg),
        acc=a,
        nmi=m,
        iterations=state.n_iter,
        exit_reason=state.exit_reason,
        wall_time=time.perf_counter() - t0,
        coupled=bool(state.coupled),
        w=state.w,
        p=state.p,
        loss_trace=[float(x) for x in state.loss_trace],
        delta_trace=[float(x) for x in state.delta_trace],
        correct_rate=correct_rate(slices, labels),
        cell=cell,
    )


def _run_task(args):
    return run_single(*args)


def aggregate(records):
    """Mean and population std of ACC/NMI plus the per-run values they came from."""
    accs = np.array([r.acc for r in records])
    nmis = np.array([r.nmi for r in records])
    return {
        "acc_mean": float(accs.mean()),
        "acc_std": float(accs.std()),
        "nmi_mean": float(nmis.mean()),
        "nmi_std": float(nmis.std()),
        "coupled_fraction": float(np.mean([r.coupled for r in records])),
        "runs": [
            {
                "rep": r.rep,
                "seed": r.seed,
                "acc": r.acc,
                "nmi": r.nmi,
                "iterations": r.iterations,
                "exit_reason": r.exit_reason,
                "coupled": r.coupled,
            }
            for r in records
        ],
    }


class _Writers:
    """CSV outputs, flushed after every record so partial results survive a crash."""

    def __init__(self, out):
        os.makedirs(out, exist_ok=True)
        self._files = []
        self.runs = self._open(out, "runs.csv", RUN_FIELDS)
        self.loss = self._open(out, "loss_trace.csv", LOSS_FIELDS)
        self.curves = self._open(out, "wp_curves.csv", CURVE_FIELDS)

    def _open(self, out, name, fields):
        fh = open(os.path.join(out, name), "w", newline="")
        self._files.append(fh)
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        return writer

    def write(self, rec):
        self.runs.writerow(rec.row())
        key = {"mode": rec.mode, "cell": rec.cell, "rep": rec.rep, "seed": rec.seed}
        deltas = [""] + rec.delta_trace
        for b, (loss, delta) in enumerate(zip(rec.loss_trace, deltas)):
            self.loss.writerow({**key, "iteration": b, "loss": repr(loss), "delta": repr(delta) if delta != "" else ""})
        for k in range(rec.w.size):
            self.curves.writerow({
                **key,
                "k": k + 1,
                "correct_rate": repr(float(rec.correct_rate[k])),
                "w_k": repr(float(rec.w[k])),
                "p_k": repr(float(rec.p[k])),
            })
        for fh in self._files:
            fh.flush()

    def close(self):
        for fh in self._files:
            fh.close()


def _dataset_digest(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def _prepare(spec):
    data = load_dataset(spec.dataset, spec.format)
    if data.labels is None:
        raise ValueError("evaluation needs labels; use a csv-features-label-last file")
    return data, slices_from_data(data.values, spec.scale_rank)


def _execute(spec, slices, labels, cells, writers):
    """Run every (cell, config, rep) job; records come back sorted by cell, then rep."""
    jobs = [
        (slices, labels, cfg, rep, spec.master_seed, spec.spectral_reps, cell)
        for cell, cfg in cells
        for rep in range(spec.reps)
    ]
    records = []
    if spec.workers > 1:
        with ProcessPoolExecutor(max_workers=spec.workers) as pool:
            for rec in pool.map(_run_task, jobs):
                writers.write(rec)
                records.append(rec)
    else:
        for job in jobs:
            rec = _run_task(job)
            writers.write(rec)
            records.append(rec)
    return records


def _write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _header(spec, data):
    return {
        "dataset_sha256": _dataset_digest(spec.dataset),
        "n": data.n,
        "m": data.m,
        "reps": spec.reps,
        "spectral_reps": spec.spectral_reps,
        "master_seed": spec.master_seed,
        "scale_rank": spec.scale_rank,
    }


def run_experiment(spec):
    """Repeated fits of one configuration; returns ``(records, aggregate)``."""
    data, slices = _prepare(spec)
    writers = _Writers(spec.out)
    try:
        cfg = spec.config
        records = _execute(spec, slices, data.labels, [(cfg.mode, cfg)], writers)
    finally:
        writers.close()
    summary = {**_header(spec, data), "config": asdict(spec.config), **aggregate(records)}
    _write_json(os.path.join(spec.out, "aggregate.json"), summary)
    return records, summary


def run_ablation(spec, modes=MODES):
    """One aggregate per mode with repetition seeds shared across modes."""
    data, slices = _prepare(spec)
    cells = [(m, replace(spec.config, mode=m)) for m in modes]
    writers = _Writers(spec.out)
    try:
        records = _execute(spec, slices, data.labels, cells, writers)
    finally:
        writers.close()
    table = {}
    for m in modes:
        rows = [r for r in records if r.cell == m]
        table[m] = {"config": asdict(replace(spec.config, mode=m)), **aggregate(rows)}
    _write_json(os.path.join(spec.out, "aggregate.json"), {**_header(spec, data), "modes": table})
    return records, table


def grid_cells(config, grid):
    keys = [k for k in GRID_KEYS if k in grid]
    cells = []
    for values in itertools.product(*(grid[k] for k in keys)):
        overrides = dict(zip(keys, values))
        name = ",".join("%s=%r" % kv for kv in overrides.items()) or "base"
        cells.append((name, replace(config, **overrides)))
    return cells


def run_grid(spec):
    """Cartesian grid over alpha, beta and mu; returns per-cell aggregates and the best cell."""
    data, slices = _prepare(spec)
    cells = grid_cells(spec.config, spec.grid)
    writers = _Writers(spec.out)
    try:
        records = _execute(spec, slices, data.labels, cells, writers)
    finally:
        writers.close()
    table = {}
    for name, cfg in cells:
        rows = [r for r in records if r.cell == name]
        table[name] = {"config": asdict(cfg), **aggregate(rows)}
    best = max(table, key=lambda c: (table[c]["acc_mean"], table[c]["nmi_mean"]))
    payload = {**_header(spec, data), "grid": {k: list(v) for k, v in spec.grid.items()}, "cells": table, "best": best}
    _write_json(os.path.join(spec.out, "aggregate.json"), payload)
    return records, table, best
