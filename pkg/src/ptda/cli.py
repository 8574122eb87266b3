"""Command-line interface.

One executable, subcommand style: simulate, select-c, fit, predict, cv,
bf, density, bench.  All outputs are machine-readable CSV/JSON, all
randomness flows from --seed, and exit codes are 0 (success), 1 (input
error), 2 (internal error).  Defaults may be overridden by a JSON config
file passed with --config or named by the PTDA_CONFIG environment
variable.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, fields

import numpy as np

from . import __version__
from .bnp_test import log_bayes_factor, log_bayes_factors
from .cvb import FittedModel, Hyperparameters, classify, fit_model, update_psi
from .dataio import Dataset, load_csv, preprocess, write_predictions_csv
from .errors import InputError, PtdaError
from .evalharness import cross_validate, scaling_probe, write_rows_csv, write_summary_json
from .polya_tree import CellCounts, CentringGaussian, PolyaTreeSpec, TreeForest, accumulate_counts, default_depth
from .simgen import SimulationSpec, generate
from .smoothing import DEFAULT_LADDER, SmoothingReport, select_c

CONFIG_ENV = "PTDA_CONFIG"


@dataclass
class Config:
    u: float = 1.5
    a_y: float = 1.0
    b_y: float = 1.0
    tol: float = 1e-6
    max_iter: int = 1000
    depth: int | None = None
    ladder: tuple = DEFAULT_LADDER
    seed: int = 0
    threads: int = 0  # 0 means all available cores
    paper_protocol: bool = False

    def hyper(self) -> Hyperparameters:
        return Hyperparameters(self.a_y, self.b_y, self.u)

    def worker_count(self) -> int:
        return self.threads if self.threads > 0 else (os.cpu_count() or 1)


def _load_config_file(path: str | None) -> dict:
    if path is None:
        path = os.environ.get(CONFIG_ENV)
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read config file {path}: {exc}") from exc
    valid = {f.name for f in fields(Config)}
    unknown = set(doc) - valid
    if unknown:
        raise InputError(f"unknown config keys: {sorted(unknown)}")
    return doc


def _config_from(args) -> Config:
    cfg = Config(**_load_config_file(getattr(args, "config", None)))
    for name in ("u", "a_y", "b_y", "tol", "max_iter", "depth", "seed", "threads"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if getattr(args, "ladder", None):
        cfg.ladder = tuple(float(v) for v in args.ladder.split(","))
    if getattr(args, "paper_protocol", False):
        cfg.paper_protocol = True
    if cfg.u <= 1.0:
        raise InputError(f"u must exceed 1, got {cfg.u}")
    if cfg.tol <= 0 or cfg.max_iter < 1:
        raise InputError("tol must be positive and max-iter at least 1")
    return cfg


def _add_common(sub, data: bool = False):
    sub.add_argument("--config", help="JSON config file (default: $PTDA_CONFIG)")
    sub.add_argument("--seed", type=int, help="random seed (default 0)")
    sub.add_argument("--u", type=float, help="complexity-prior exponent, > 1 (default 1.5)")
    sub.add_argument("--a-y", dest="a_y", type=float, help="beta prior a on the group-1 proportion (default 1)")
    sub.add_argument("--b-y", dest="b_y", type=float, help="beta prior b on the group-1 proportion (default 1)")
    sub.add_argument("--tol", type=float, help="selection convergence tolerance (default 1e-6)")
    sub.add_argument("--max-iter", dest="max_iter", type=int, help="maximum selection sweeps (default 1000)")
    sub.add_argument("--depth", type=int, help="tree truncation depth (default floor(log2 n))")
    sub.add_argument("--threads", type=int, help="worker thread cap (default: all cores)")
    if data:
        sub.add_argument("--data", required=True, help="input CSV path")
        sub.add_argument("--label-column", dest="label_column", help="name of the label column")
        sub.add_argument("--positive-label", dest="positive_label", help="label value mapped to group 1")
        sub.add_argument("--orientation", default="samples-in-rows",
                         choices=["samples-in-rows", "variables-in-rows"],
                         help="CSV layout (default samples-in-rows)")


def _load_dataset(args, need_labels: bool = True) -> Dataset:
    label_column = getattr(args, "label_column", None)
    if need_labels and label_column is None:
        raise InputError("--label-column is required here")
    ds = load_csv(args.data, label_column=label_column,
                  orientation=getattr(args, "orientation", "samples-in-rows"),
                  positive_label=getattr(args, "positive_label", None))
    if ds.label_mapping:
        print(f"label mapping: {ds.label_mapping}", file=sys.stderr)
    return ds


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract reserves 2 for internal ones."""

    def error(self, message):
        raise InputError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ptda",
        description="Nonparametric discriminant analysis with tree-based "
                    "variable selection for two-group data.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    commands = parser.add_subparsers(dest="command", required=True)

    sim = commands.add_parser("simulate", help="write seeded benchmark train/test/truth CSVs")
    sim.add_argument("--setting", type=int, required=True, help="benchmark setting, 1-6")
    sim.add_argument("--n-train", dest="n_train", type=int, default=100, help="training rows (default 100)")
    sim.add_argument("--n-test", dest="n_test", type=int, default=1000, help="test rows (default 1000)")
    sim.add_argument("--p", type=int, default=500, help="number of variables (default 500)")
    sim.add_argument("--n-disc", dest="n_disc", type=int, default=50,
                     help="number of discriminative variables (default 50)")
    sim.add_argument("--out-dir", dest="out_dir", required=True, help="output directory")
    _add_common(sim)

    sel = commands.add_parser("select-c", help="choose smoothing parameters and write the report")
    _add_common(sel, data=True)
    sel.add_argument("--ladder", help="comma-separated candidate values (default 1,5,10,50,100)")
    sel.add_argument("--out", required=True, help="report JSON path")
    sel.add_argument("--out-csv", dest="out_csv", help="optional per-variable CSV path")

    fit = commands.add_parser("fit", help="fit the model and write model JSON")
    _add_common(fit, data=True)
    fit.add_argument("--c", type=float, help="single smoothing parameter for every variable")
    fit.add_argument("--c-report", dest="c_report", help="smoothing report JSON from select-c")
    fit.add_argument("--ladder", help="comma-separated candidate values if selecting c here")
    fit.add_argument("--median-floor", dest="median_floor", type=float,
                     help="drop variables with median <= this")
    fit.add_argument("--variance-floor", dest="variance_floor", type=float,
                     help="drop variables with variance <= this")
    fit.add_argument("--no-standardize", dest="no_standardize", action="store_true",
                     help="fit on raw columns without standardizing")
    fit.add_argument("--out", required=True, help="model JSON path")

    pred = commands.add_parser("predict", help="class probabilities for new points")
    pred.add_argument("--model", required=True, help="model JSON from fit")
    _add_common(pred, data=True)
    pred.add_argument("--threshold", type=float, default=0.5, help="label threshold (default 0.5)")
    pred.add_argument("--out", required=True, help="predictions CSV path")

    cv = commands.add_parser("cv", help="stratified k-fold cross-validation")
    _add_common(cv, data=True)
    cv.add_argument("--k", type=int, default=5, help="number of folds (default 5)")
    cv.add_argument("--ladder", help="comma-separated candidate values (default 1,5,10,50,100)")
    cv.add_argument("--paper-protocol", dest="paper_protocol", action="store_true",
                    help="standardize the whole dataset before splitting")
    cv.add_argument("--median-floor", dest="median_floor", type=float,
                    help="drop variables with median <= this")
    cv.add_argument("--variance-floor", dest="variance_floor", type=float,
                    help="drop variables with variance <= this")
    cv.add_argument("--timings", action="store_true", help="include wall times in the CSV")
    cv.add_argument("--out", required=True, help="fold metrics CSV path")
    cv.add_argument("--out-summary", dest="out_summary", help="optional summary JSON path")

    bf = commands.add_parser("bf", help="per-variable two-sample log Bayes factors")
    _add_common(bf, data=True)
    bf.add_argument("--c", type=float, default=1.0, help="smoothing parameter (default 1)")
    bf.add_argument("--value-column", dest="value_column",
                    help="two-column mode: the value column name")
    bf.add_argument("--group-column", dest="group_column",
                    help="two-column mode: the group column name")

    dens = commands.add_parser("density", help="per-group predictive density grid for one variable")
    dens.add_argument("--model", required=True, help="model JSON from fit")
    dens.add_argument("--variable", required=True, help="variable name")
    dens.add_argument("--grid-points", dest="grid_points", type=int, default=512,
                      help="grid resolution (default 512)")
    dens.add_argument("--x-min", dest="x_min", type=float, help="grid lower end (default mean - 4 sd)")
    dens.add_argument("--x-max", dest="x_max", type=float, help="grid upper end (default mean + 4 sd)")
    dens.add_argument("--out", required=True, help="density CSV path")

    bench = commands.add_parser("bench", help="wall-time scaling probe of the fit")
    bench.add_argument("--p-values", dest="p_values", default="250,500,1000,2000",
                       help="comma-separated p grid (default 250,500,1000,2000)")
    bench.add_argument("--n", type=int, default=100, help="training rows (default 100)")
    bench.add_argument("--c", type=float, default=1.0, help="smoothing parameter (default 1)")
    bench.add_argument("--repeats", type=int, default=3, help="timing repeats, best kept (default 3)")
    bench.add_argument("--out", required=True, help="timing CSV path")
    _add_common(bench)

    return parser


def _cmd_simulate(args, cfg: Config) -> int:
    spec = SimulationSpec(args.setting, args.n_train, args.n_test, args.p, args.n_disc, cfg.seed)
    train, test, truth = generate(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    for tag, ds in (("train", train), ("test", test)):
        path = os.path.join(args.out_dir, f"{tag}.csv")
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(",".join(ds.names + ["y"]) + "\n")
            for row, label in zip(ds.matrix, ds.labels):
                fh.write(",".join(repr(float(v)) for v in row) + f",{int(label)}\n")
    with open(os.path.join(args.out_dir, "truth.csv"), "w", encoding="utf-8", newline="") as fh:
        fh.write("variable,discriminative\n")
        for name, flag in zip(train.names, truth):
            fh.write(f"{name},{int(flag)}\n")
    return 0


def _cmd_select_c(args, cfg: Config) -> int:
    ds = _load_dataset(args)
    report = select_c(ds.matrix, ds.labels, hyper=cfg.hyper(), grid=cfg.ladder,
                      depth=cfg.depth, tol=cfg.tol, max_iter=cfg.max_iter, seed=cfg.seed)
    report.save(args.out)
    if args.out_csv:
        report.write_csv(args.out_csv, ds.names)
    print(f"chosen a: {report.chosen_a}  resubstitution error: {report.resubstitution_error}")
    return 0


def _resolve_c(args, cfg: Config, ds: Dataset):
    if args.c is not None and args.c_report:
        raise InputError("pass either --c or --c-report, not both")
    if args.c is not None:
        return args.c, None
    if args.c_report:
        report = SmoothingReport.load(args.c_report)
        if report.bins.size != ds.p:
            raise InputError(f"the report covers {report.bins.size} variables, the data has {ds.p}")
        return report.c, report
    report = select_c(ds.matrix, ds.labels, hyper=cfg.hyper(), grid=cfg.ladder,
                      depth=cfg.depth, tol=cfg.tol, max_iter=cfg.max_iter, seed=cfg.seed)
    return report.c, report


def _cmd_fit(args, cfg: Config) -> int:
    ds = _load_dataset(args)
    if args.no_standardize:
        if args.median_floor is not None or args.variance_floor is not None:
            raise InputError("the median/variance filters run inside the standardization path")
    else:
        ds = preprocess(ds, args.median_floor, args.variance_floor)
    c, _ = _resolve_c(args, cfg, ds)
    model = fit_model(ds.matrix, ds.labels, c, hyper=cfg.hyper(), depth=cfg.depth,
                      tol=cfg.tol, max_iter=cfg.max_iter, names=ds.names,
                      standardization=ds.standardization)
    model.save(args.out)
    psi = update_psi(model, ds.matrix)
    error = float(np.mean(classify(psi) != ds.labels))
    print(f"fitted p={ds.p} n={ds.n}  sweeps={model.selection.iteration} "
          f"converged={model.selection.converged}  resubstitution error: {error}")
    return 0


def _cmd_predict(args, cfg: Config) -> int:
    model = FittedModel.load(args.model)
    ds = _load_dataset(args, need_labels=False)
    if ds.p != model.p:
        raise InputError(f"model has {model.p} variables, data has {ds.p}")
    psi = update_psi(model, model.transform_new(ds.matrix))
    labels = classify(psi, args.threshold)
    write_predictions_csv(args.out, psi.psi, labels)
    if ds.labels is not None:
        error = float(np.mean(labels != ds.labels))
        print(f"classification error: {error}")
    return 0


def _cmd_cv(args, cfg: Config) -> int:
    ds = _load_dataset(args)
    if args.median_floor is not None or args.variance_floor is not None:
        ds = preprocess(ds, args.median_floor, args.variance_floor)
    rows, summary = cross_validate(ds, args.k, hyper=cfg.hyper(), grid=cfg.ladder,
                                   depth=cfg.depth, tol=cfg.tol, max_iter=cfg.max_iter,
                                   seed=cfg.seed, paper_protocol=cfg.paper_protocol,
                                   threads=cfg.worker_count())
    write_rows_csv(args.out, rows, include_timings=args.timings)
    if args.out_summary:
        write_summary_json(args.out_summary, summary)
    errors = [r["classification_error"] for r in rows]
    print(f"cv mean classification error: {float(np.mean(errors))}")
    return 0


def _cmd_bf(args, cfg: Config) -> int:
    if (args.value_column is None) != (args.group_column is None):
        raise InputError("two-column mode needs both --value-column and --group-column")
    if args.value_column is not None:
        ds = load_csv(args.data, label_column=args.group_column,
                      positive_label=getattr(args, "positive_label", None))
        if args.value_column not in ds.names:
            raise InputError(f"value column {args.value_column!r} not in header")
        column = ds.matrix[:, ds.names.index(args.value_column)]
        depth = cfg.depth or default_depth(column.size)
        spec = PolyaTreeSpec(CentringGaussian.from_sample(column), args.c, depth)
        value = log_bayes_factor(accumulate_counts(column, ds.labels, spec), spec)
        print(f"{args.value_column},{value!r}")
        return 0
    ds = _load_dataset(args)
    depth = cfg.depth or default_depth(ds.n)
    forest = TreeForest.from_matrix(ds.matrix, ds.labels, depth)
    values = log_bayes_factors(forest, args.c)
    for name, value in zip(ds.names, values):
        print(f"{name},{float(value)!r}")
    return 0


def _cmd_density(args, cfg: Config) -> int:
    from .polya_tree import predictive_density

    model = FittedModel.load(args.model)
    if args.variable not in model.names:
        raise InputError(f"variable {args.variable!r} not in the model")
    j = model.names.index(args.variable)
    tree = model.trees[j]
    counts = model.counts[j]
    g = tree.centring
    lo = args.x_min if args.x_min is not None else g.mean - 4.0 * g.sd
    hi = args.x_max if args.x_max is not None else g.mean + 4.0 * g.sd
    if args.grid_points < 2 or hi <= lo:
        raise InputError("need at least 2 grid points and x-max > x-min")
    xs = np.linspace(lo, hi, args.grid_points)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("x,density_group1,density_group0\n")
        for x in xs:
            f1 = predictive_density(float(x), counts, tree, 1)
            f0 = predictive_density(float(x), counts, tree, 0)
            fh.write(f"{float(x)!r},{f1!r},{f0!r}\n")
    return 0


def _cmd_bench(args, cfg: Config) -> int:
    p_values = tuple(int(v) for v in args.p_values.split(","))
    if any(v < 1 for v in p_values):
        raise InputError("p values must be positive")
    rows = scaling_probe(p_values, n=args.n, seed=cfg.seed, c=args.c, repeats=args.repeats)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        fh.write("p,n,seconds\n")
        for row in rows:
            fh.write(f"{row['p']},{row['n']},{row['seconds']!r}\n")
    for row in rows:
        print(f"p={row['p']}: {row['seconds']:.3f}s")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "select-c": _cmd_select_c,
    "fit": _cmd_fit,
    "predict": _cmd_predict,
    "cv": _cmd_cv,
    "bf": _cmd_bf,
    "density": _cmd_density,
    "bench": _cmd_bench,
}


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _config_from(args)
        return _COMMANDS[args.command](args, cfg)
    except PtdaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())
