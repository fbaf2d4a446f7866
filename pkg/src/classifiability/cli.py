"""Command-line interface.

Every subcommand writes JSON to stdout (or ``--out``) and a short summary to
stderr. Exit status: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from . import _accel
from .baselines import ClassifierConfig, SplitSpec, evaluate
from .core import NeighborhoodSpec
from .errors import ClassifiabilityError
from .estimator import (
    classifiability,
    entropy_map,
    jackknife,
    metric_sweep,
    overclass_check,
    subsample_sweep,
)
from .io import ColumnSchema, ORDINAL, read_csv, save_csv, standard_scale, write_entropy_csv, write_json
from .metrics import MetricKind
from .neighbors import k_from_fraction, threshold_from_fraction
from .oracle import BUILTIN_PROBLEMS, bayes_limit, builtin_problem, load_problem
from .synth import FOUR_BLOBS, KINDS, SynthSpec, generate

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2
METRIC_CHOICES = [m.value for m in MetricKind]


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _floats(text):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _names(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def _centers(text):
    return [_floats(part) for part in text.split(";") if part.strip()]


# ---------------------------------------------------------- shared options


def _add_common(p):
    p.add_argument("--out", help="write the JSON result here instead of stdout")
    p.add_argument("--threads", type=int, help="worker threads (default: CLASSIFIABILITY_THREADS)")


def _add_dataset(p):
    p.add_argument("--dataset", required=True, help="CSV file with a header row")
    p.add_argument("--label", default="label", help="label column name (default: label)")
    p.add_argument("--features", type=_names, help="comma-separated feature columns (default: all others)")
    p.add_argument("--categorical", type=_names, default=[],
                   help="columns to ordinal-encode (pair with --metric hamming)")
    p.add_argument("--scale", action="store_true", help="standard-scale features first")


def _add_neighborhood(p, allow_all=True, required=True):
    group = p.add_mutually_exclusive_group(required=required)
    group.add_argument("--radius", type=float, help="radius threshold theta")
    group.add_argument("--k", type=int, help="number of nearest neighbors")
    group.add_argument("--auto-fraction", type=float,
                       help="k as this fraction of n, clipped to [--k-min, --k-max]")
    group.add_argument("--radius-fraction", type=float,
                       help="theta as the mean distance to this fraction of nearest points")
    p.add_argument("--k-min", type=int, default=6)
    p.add_argument("--k-max", type=int, default=32)
    choices = METRIC_CHOICES + (["all"] if allow_all else [])
    p.add_argument("--metric", default="l2", choices=choices)
    p.add_argument("--brute-force", action="store_true", help="disable the KD-tree index")


def _load(args):
    encodings = {c: ORDINAL for c in args.categorical}
    schema = ColumnSchema(args.label, tuple(args.features or ()), encodings)
    table = read_csv(args.dataset, schema)
    dataset = table.dataset
    if args.scale:
        dataset, _ = standard_scale(dataset)
    return dataset, table


def _spec_factory(args, dataset):
    def make(metric):
        if args.radius is not None:
            return NeighborhoodSpec.radius(args.radius, metric)
        if args.k is not None:
            return NeighborhoodSpec.knn(args.k, metric)
        if args.auto_fraction is not None:
            return NeighborhoodSpec.knn(k_from_fraction(dataset.n, args.auto_fraction, args.k_min, args.k_max),
                                        metric)
        theta = threshold_from_fraction(dataset, args.radius_fraction, metric, args.brute_force)
        return NeighborhoodSpec.radius(theta, metric)
    return make


def _single_metric(args):
    if args.metric == "all":
        raise UsageError("--metric all is only supported by estimate")
    return MetricKind.parse(args.metric)


def _emit(result, args):
    if args.out:
        write_json(result, path=args.out)
    else:
        write_json(result, stream=sys.stdout)


def _note(message):
    print(message, file=sys.stderr)


# ------------------------------------------------------------- subcommands


def cmd_estimate(args):
    dataset, _ = _load(args)
    make = _spec_factory(args, dataset)
    if args.metric == "all":
        reports, best = metric_sweep(dataset, make, brute_force=args.brute_force)
        result = {
            "results": {m.value: r.to_dict() for m, r in reports.items()},
            "best_metric": best.value,
            "best_limit": reports[best].limit,
        }
        for m, r in reports.items():
            _note(f"{m.value:>10}: limit {r.limit:.4f}{'  <- best' if m is best else ''}")
    else:
        report = classifiability(dataset, make(MetricKind.parse(args.metric)),
                                 brute_force=args.brute_force, full_entropy=args.full_entropy)
        result = report.to_dict()
        _note(f"classifiability limit {report.limit:.4f} (n={report.n}, d={report.d}, "
              f"empty neighborhoods {report.empty_neighborhood_count})")
    _emit(result, args)


def cmd_entropy_map(args):
    dataset, _ = _load(args)
    spec = _spec_factory(args, dataset)(_single_metric(args))
    emap = entropy_map(dataset, spec, brute_force=args.brute_force)
    if args.csv:
        write_entropy_csv(emap, args.csv)
    result = {
        "config": spec.to_dict(),
        "classes": list(emap.classes),
        "records": list(emap.records()),
    }
    _note(f"{len(emap)} points, mean entropy {float(np.mean(emap.entropy)):.4f}")
    _emit(result, args)


def _synth_spec(args, noise=None):
    params = {}
    if args.kind == "circles":
        params["radius_ratio"] = args.radius_ratio
    elif args.kind == "blobs":
        params["centers"] = args.centers or FOUR_BLOBS
    elif args.kind == "overlap1d":
        params["offset"] = args.offset
    elif args.kind == "madelon":
        params.update(n_features=args.n_features, n_informative=args.n_informative,
                      n_redundant=args.n_redundant, n_classes=args.n_classes,
                      clusters_per_class=args.clusters_per_class, class_sep=args.class_sep,
                      flip_fraction=args.flip_fraction)
    return SynthSpec(args.kind, args.n, args.noise if noise is None else noise, args.seed, params)


def _add_synth(p, n_default):
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--n", type=int, default=n_default)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--radius-ratio", type=float, default=0.5, help="circles: inner radius")
    p.add_argument("--centers", type=_centers, help="blobs: 'x,y;x,y;...'")
    p.add_argument("--offset", type=float, default=0.5, help="overlap1d: shift of the second class")
    p.add_argument("--n-features", type=int, default=20)
    p.add_argument("--n-informative", type=int, default=5)
    p.add_argument("--n-redundant", type=int, default=5)
    p.add_argument("--n-classes", type=int, default=2)
    p.add_argument("--clusters-per-class", type=int, default=2)
    p.add_argument("--class-sep", type=float, default=1.0)
    p.add_argument("--flip-fraction", type=float, default=0.01)


def cmd_generate(args):
    dataset = generate(_synth_spec(args))
    save_csv(dataset, args.csv)
    counts = dataset.class_counts().tolist()
    result = {"kind": args.kind, "n": dataset.n, "d": dataset.d, "noise": args.noise,
              "seed": args.seed, "classes": list(dataset.classes.names), "class_counts": counts,
              "path": args.csv}
    _note(f"wrote {dataset.n} x {dataset.d} {args.kind} dataset to {args.csv}")
    _emit(result, args)


def cmd_sweep_noise(args):
    metric = _single_metric(args)
    levels = args.noise_levels or np.linspace(0.0, args.noise_max, args.levels).tolist()
    curve = []
    for noise in levels:
        limits = []
        for s in range(args.seeds):
            spec_args = argparse.Namespace(**{**vars(args), "seed": args.seed + s})
            dataset = generate(_synth_spec(spec_args, noise))
            spec = _spec_factory(args, dataset)(metric)
            limits.append(classifiability(dataset, spec, brute_force=args.brute_force).limit)
        curve.append({"noise": float(noise), "mean_limit": float(np.mean(limits)),
                      "std_limit": float(np.std(limits)), "limits": limits})
        _note(f"noise {noise:.3f}: limit {curve[-1]['mean_limit']:.4f} +/- {curve[-1]['std_limit']:.4f}")
    _emit({"kind": args.kind, "n": args.n, "seeds": args.seeds, "metric": metric.value,
           "curve": curve}, args)


def cmd_sweep_subsample(args):
    dataset, _ = _load(args)
    spec = _spec_factory(args, dataset)(_single_metric(args))
    curve = subsample_sweep(dataset, spec, args.proportions, args.repeats, args.seed, args.brute_force)
    for pt in curve:
        _note(f"proportion {pt.proportion:.3f}: limit {pt.mean_limit:.4f} +/- {pt.std_limit:.4f}")
    _emit({"config": spec.to_dict(), "repeats": args.repeats, "seed": args.seed,
           "curve": [pt.to_dict() for pt in curve]}, args)


def cmd_jackknife(args):
    dataset, _ = _load(args)
    spec = _spec_factory(args, dataset)(_single_metric(args))
    report = jackknife(dataset, spec, args.fraction, args.rounds, args.seed, args.brute_force)
    _note(f"jackknife max {report.max_limit:.4f}, mean {report.mean_limit:.4f} +/- {report.std_limit:.4f}")
    _emit({"config": spec.to_dict(), "seed": args.seed, **report.to_dict()}, args)


def cmd_compare(args):
    dataset, _ = _load(args)
    metric = _single_metric(args)
    estimate = classifiability(dataset, NeighborhoodSpec.knn(args.k, metric), brute_force=args.brute_force)
    split = SplitSpec(args.train_fraction, True, args.seed)
    configs = []
    if args.classifier in ("knn", "both"):
        configs.append(ClassifierConfig("knn", k=args.k, metric=metric))
    if args.classifier in ("radius", "both"):
        theta = args.radius or threshold_from_fraction(dataset, 0.02, metric)
        configs.append(ClassifierConfig("radius", theta=theta, metric=metric))
    baselines = []
    for cfg in configs:
        ev = evaluate(dataset, split, cfg, args.repeats)
        row = ev.to_dict()
        row["gap_to_limit"] = estimate.limit - ev.mean_accuracy
        baselines.append(row)
        _note(f"{cfg.kind:>6}: accuracy {ev.mean_accuracy:.4f} +/- {ev.std_accuracy:.4f} "
              f"(limit {estimate.limit:.4f})")
    _emit({"estimate": estimate.to_dict(), "baselines": baselines, "seed": args.seed}, args)


def cmd_oracle(args):
    cells = args.cells
    if args.problem_file:
        problem = load_problem(args.problem_file, cells)
        name = args.problem_file
    else:
        problem = builtin_problem(args.problem, cells)
        name = args.problem
    limit = bayes_limit(problem)
    _note(f"{name}: analytic classifiability limit {limit:.6f}")
    _emit({"limit": limit, "problem": name, "cells": list(problem.cells),
           "weights": problem.weights.tolist()}, args)


def cmd_overclass(args):
    if args.resolutions is not None:
        resolutions = args.resolutions
        points = args.points
        if points is None:
            raise UsageError("overclass: --points is required with --resolutions")
    else:
        dataset, _ = _load(args)
        resolutions = [int(np.unique(dataset.features[:, j]).size) for j in range(dataset.d)]
        points = dataset.n if args.points is None else args.points
    report = overclass_check(resolutions, points)
    verdict = "over-classified" if report.over_classified else "ok"
    _note(f"N = {report.potential_classes}, need {report.min_points} points, have {points}: {verdict}")
    _emit(report.to_dict(), args)


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="classifiability", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("estimate", help="estimate the classifiability limit of a CSV dataset")
    _add_dataset(p)
    _add_neighborhood(p)
    p.add_argument("--full-entropy", action="store_true",
                   help="evaluate the logarithmic entropy formula (verification)")
    _add_common(p)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("entropy-map", help="per-point entropies for plotting")
    _add_dataset(p)
    _add_neighborhood(p, allow_all=False)
    p.add_argument("--csv", help="also write index,label,entropy,neighborhood_size,x0.. rows here")
    _add_common(p)
    p.set_defaults(func=cmd_entropy_map)

    p = sub.add_parser("generate", help="write a synthetic dataset as CSV")
    _add_synth(p, 500)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--out", dest="csv", required=True, help="destination CSV path")
    p.add_argument("--threads", type=int)
    p.set_defaults(func=cmd_generate, out=None)

    p = sub.add_parser("sweep-noise", help="estimate vs noise level on a synthetic family")
    _add_synth(p, 500)
    p.add_argument("--noise-levels", type=_floats)
    p.add_argument("--noise-max", type=float, default=1.0)
    p.add_argument("--levels", type=int, default=10)
    p.add_argument("--seeds", type=int, default=25)
    _add_neighborhood(p, allow_all=False)
    _add_common(p)
    p.set_defaults(func=cmd_sweep_noise)

    p = sub.add_parser("sweep-subsample", help="estimate vs subsampling proportion")
    _add_dataset(p)
    _add_neighborhood(p, allow_all=False)
    p.add_argument("--proportions", type=_floats, default=[0.1, 0.2, 0.4, 0.6, 0.8, 1.0])
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_sweep_subsample)

    p = sub.add_parser("jackknife", help="estimates on stratified subsamples without replacement")
    _add_dataset(p)
    _add_neighborhood(p, allow_all=False)
    p.add_argument("--fraction", type=float, default=0.8)
    p.add_argument("--rounds", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    _add_common(p)
    p.set_defaults(func=cmd_jackknife)

    p = sub.add_parser("compare", help="neighbor classifiers' test accuracy vs the estimate")
    _add_dataset(p)
    p.add_argument("--k", type=int, default=16)
    p.add_argument("--metric", default="l2", choices=METRIC_CHOICES)
    p.add_argument("--classifier", choices=["knn", "radius", "both"], default="both")
    p.add_argument("--radius", type=float, help="radius classifier theta (default: 2%% heuristic)")
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--train-fraction", type=float, default=2.0 / 3.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--brute-force", action="store_true")
    _add_common(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle", help="analytic limit of a gridded density problem")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--problem", choices=sorted(BUILTIN_PROBLEMS))
    src.add_argument("--problem-file", help="JSON problem definition")
    p.add_argument("--cells", type=_ints, help="grid cells per axis")
    _add_common(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("overclass", help="check the P >= 20 N data-volume rule")
    p.add_argument("--resolutions", type=_ints, help="values per dimension, e.g. 4,4,3,3")
    p.add_argument("--points", type=int)
    p.add_argument("--dataset", help="infer resolutions from distinct values per column")
    p.add_argument("--label", default="label")
    p.add_argument("--features", type=_names)
    p.add_argument("--categorical", type=_names, default=[])
    p.set_defaults(scale=False)
    _add_common(p)
    p.set_defaults(func=cmd_overclass)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "overclass" and args.resolutions is None and args.dataset is None:
            raise UsageError("overclass: give --resolutions or --dataset")
        _accel.set_threads(args.threads)
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except (ClassifiabilityError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SystemExit as exc:  # --help
        return EXIT_OK if not exc.code else EXIT_USAGE
    return EXIT_OK


def run_cli(argv=None) -> int:
    return main(argv)


if __name__ == "__main__":
    sys.exit(main())
