"""Command-line entry point.

Settings resolve in three layers: built-in defaults, then a flat
``key = value`` file given with ``--config``, then explicit flags.
"""
import argparse
import configparser
import csv
from dataclasses import asdict
import json
import logging
import os
import sys

import numpy as np

from .datasets import FORMATS, load_dataset
from .experiment import ExperimentSpec, run_ablation, run_experiment, run_grid
from .graph import correct_rate, slices_from_data
from .metrics import acc, nmi
from .postcluster import augment, spectral_cluster
from .solver import MODES, SolverConfig, fit

DEFAULTS = {
    "alpha": 0.1,
    "beta": 10.0,
    "mu": 0.1,
    "eta_ratio": 0.99,
    "rank": None,
    "mode": "full",
    "seed": 0,
    "reps": 20,
    "spectral_reps": 20,
    "scale_rank": 7,
    "max_iter": 1000,
    "tol_loss": 1e-4,
    "tol_var": 1e-4,
    "format": "csv-features-label-last",
    "out": "results",
    "workers": 1,
    "grid_alpha": None,
    "grid_beta": None,
    "grid_mu": None,
    "modes": None,
}
FLOATS = {"alpha", "beta", "mu", "eta_ratio", "tol_loss", "tol_var"}
INTS = {"rank", "seed", "reps", "spectral_reps", "scale_rank", "max_iter", "workers"}
LISTS = {"grid_alpha", "grid_beta", "grid_mu"}


def _float_list(text):
    return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]


def read_config(path):
    """Parse a flat ``key = value`` file; ``#`` starts a comment line."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    with open(path) as fh:
        parser.read_string("[config]\n" + fh.read(), source=path)
    out = {}
    for key, raw in parser["config"].items():
        name = key.replace("-", "_")
        if name not in DEFAULTS:
            raise ValueError("%s: unknown key %r" % (path, key))
        out[name] = _coerce(name, raw)
    return out


def _coerce(name, raw):
    if raw is None:
        return None
    if name in FLOATS:
        return float(raw)
    if name in INTS:
        return int(raw)
    if name in LISTS:
        return _float_list(raw)
    if name == "modes":
        return [m.strip() for m in str(raw).split(",") if m.strip()]
    return raw


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("dataset", help="CSV file, one sample per row")
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("--format", choices=FORMATS)
    common.add_argument("--alpha", type=float, help="orthogonality weight (default 0.1)")
    common.add_argument("--beta", type=float, help="dissimilarity weight (default 10)")
    common.add_argument("--mu", type=float, help="density weight (default 0.1)")
    common.add_argument("--eta-ratio", type=float, help="coupling penalty as a fraction of mu (default 0.99)")
    common.add_argument("--rank", type=int, help="number of clusters; inferred from labels if omitted")
    common.add_argument("--mode", choices=MODES)
    common.add_argument("--seed", type=int, help="fit seed, or master seed for repeated runs")
    common.add_argument("--reps", type=int, help="repetitions (default 20)")
    common.add_argument("--spectral-reps", type=int, help="spectral runs per repetition (default 20)")
    common.add_argument("--scale-rank", type=int, help="neighbour rank of the local kernel scale (default 7)")
    common.add_argument("--max-iter", type=int)
    common.add_argument("--tol-loss", type=float)
    common.add_argument("--tol-var", type=float)
    common.add_argument("--workers", type=int, help="parallel processes for repeated runs")
    common.add_argument("--out", help="output directory (default ./results)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="lsdsymnmf", description="Similarity/dissimilarity guided SymNMF clustering")
    sub = parser.add_subparsers(dest="verb", required=True)
    sub.add_parser("fit", parents=[common], help="fit once and write weights and traces")
    sub.add_parser("cluster", parents=[common], help="fit once and write cluster labels")
    sub.add_parser("eval", parents=[common], help="repeated runs with ACC/NMI aggregates")
    ablate = sub.add_parser("ablate", parents=[common], help="paired runs over solver modes")
    ablate.add_argument("--modes", type=lambda s: _coerce("modes", s), help="comma-separated subset of modes")
    grid = sub.add_parser("grid", parents=[common], help="repeated runs over a hyper-parameter grid")
    grid.add_argument("--grid-alpha", type=_float_list)
    grid.add_argument("--grid-beta", type=_float_list)
    grid.add_argument("--grid-mu", type=_float_list)
    sub.add_parser("curves", parents=[common], help="correct-rate and weight curves for one fit")
    return parser


def resolve(args):
    settings = dict(DEFAULTS)
    if args.config:
        settings.update(read_config(args.config))
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            settings[key] = value
    return settings


def _solver_config(settings, data):
    r = settings["rank"]
    if r is None:
        if data.labels is None:
            raise ValueError("--rank is required when the data has no labels")
        r = data.n_classes
    return SolverConfig(
        r=r,
        alpha=settings["alpha"],
        beta=settings["beta"],
        mu=settings["mu"],
        eta_ratio=settings["eta_ratio"],
        max_iter=settings["max_iter"],
        tol_loss=settings["tol_loss"],
        tol_var=settings["tol_var"],
        seed=settings["seed"],
        mode=settings["mode"],
    )


def _spec(args, settings, data):
    grid = {k: settings["grid_" + k] for k in ("alpha", "beta", "mu") if settings["grid_" + k]}
    return ExperimentSpec(
        dataset=args.dataset,
        config=_solver_config(settings, data),
        format=settings["format"],
        reps=settings["reps"],
        spectral_reps=settings["spectral_reps"],
        master_seed=settings["seed"],
        scale_rank=settings["scale_rank"],
        out=settings["out"],
        grid=grid,
        workers=settings["workers"],
    )


def _write_traces(out, state, labels):
    with open(os.path.join(out, "loss_trace.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["iteration", "loss", "delta"])
        deltas = [""] + [repr(float(d)) for d in state.delta_trace]
        for b, (loss, delta) in enumerate(zip(state.loss_trace, deltas)):
            writer.writerow([b, repr(float(loss)), delta])
    rates = correct_rate(state.slices, labels) if labels is not None else None
    with open(os.path.join(out, "wp_curves.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["k", "correct_rate", "w_k", "p_k"])
        for k in range(state.w.size):
            cr = repr(float(rates[k])) if rates is not None else ""
            writer.writerow([k + 1, cr, repr(float(state.w[k])), repr(float(state.p[k]))])


def _fit_once(args, settings):
    data = load_dataset(args.dataset, settings["format"])
    config = _solver_config(settings, data)
    slices = slices_from_data(data.values, settings["scale_rank"])
    state = fit(slices, config)
    os.makedirs(settings["out"], exist_ok=True)
    return data, config, state


def _summary(config, state):
    return {
        "config": asdict(config),
        "iterations": state.n_iter,
        "exit_reason": state.exit_reason,
        "coupled": bool(state.coupled),
        "final_loss": float(state.loss_trace[-1]),
        "kkt_max": state.kkt_max,
        "k0": state.k0,
        "w": [float(x) for x in state.w],
        "p": [float(x) for x in state.p],
    }


def cmd_fit(args, settings):
    data, config, state = _fit_once(args, settings)
    out = settings["out"]
    with open(os.path.join(out, "fit.json"), "w") as fh:
        json.dump(_summary(config, state), fh, sort_keys=True, indent=2)
        fh.write("\n")
    _write_traces(out, state, data.labels)
    print("fit: %d iterations, exit=%s, loss=%.6g" % (state.n_iter, state.exit_reason, state.loss_trace[-1]))
    return 0


def cmd_cluster(args, settings):
    data, config, state = _fit_once(args, settings)
    result = spectral_cluster(augment(state.S, state.D, state.V), config.r, config.seed, config.fingerprint())
    path = os.path.join(settings["out"], "labels.csv")
    np.savetxt(path, result.labels, fmt="%d")
    print("wrote %d labels to %s" % (data.n, path))
    if data.labels is not None:
        print("ACC %.4f  NMI %.4f" % (acc(result.labels, data.labels), nmi(result.labels, data.labels)))
    return 0


def cmd_curves(args, settings):
    data, _, state = _fit_once(args, settings)
    if data.labels is None:
        raise ValueError("correct-rate curves need labels")
    _write_traces(settings["out"], state, data.labels)
    print("wrote wp_curves.csv and loss_trace.csv to %s" % settings["out"])
    return 0


def _load_for_spec(args, settings):
    data = load_dataset(args.dataset, settings["format"])
    return _spec(args, settings, data)


def cmd_eval(args, settings):
    _, summary = run_experiment(_load_for_spec(args, settings))
    print("ACC %.4f +- %.4f  NMI %.4f +- %.4f" % (
        summary["acc_mean"], summary["acc_std"], summary["nmi_mean"], summary["nmi_std"]))
    return 0


def cmd_ablate(args, settings):
    modes = settings["modes"] or list(MODES)
    bad = [m for m in modes if m not in MODES]
    if bad:
        raise ValueError("unknown modes %s" % bad)
    _, table = run_ablation(_load_for_spec(args, settings), modes)
    for mode, row in table.items():
        print("%-10s ACC %.4f +- %.4f  NMI %.4f +- %.4f" % (
            mode, row["acc_mean"], row["acc_std"], row["nmi_mean"], row["nmi_std"]))
    return 0


def cmd_grid(args, settings):
    spec = _load_for_spec(args, settings)
    if not spec.grid:
        raise ValueError("give at least one of --grid-alpha, --grid-beta, --grid-mu")
    _, table, best = run_grid(spec)
    for name, row in table.items():
        print("%-30s ACC %.4f  NMI %.4f" % (name, row["acc_mean"], row["nmi_mean"]))
    print("best: %s" % best)
    return 0


COMMANDS = {
    "fit": cmd_fit,
    "cluster": cmd_cluster,
    "eval": cmd_eval,
    "ablate": cmd_ablate,
    "grid": cmd_grid,
    "curves": cmd_curves,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        settings = resolve(args)
        return COMMANDS[args.verb](args, settings)
    except (ValueError, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
