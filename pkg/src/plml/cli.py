"""Command line interface.

Subcommands: train, predict, eval, cv, sweep, viz, compare. Options on
the command line override values from --config (TOML or JSON); exit
codes are 0 on success, 1 for usage/configuration problems, 2 for
unreadable or malformed data, and 3 for solver failures.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields, replace

from . import pipeline
from .datasets import load_dataset
from .ellipses import export_ellipses
from .errors import ContractError, DataError, SolverError
from .evaluation import accuracy
from .model_io import load_model, save_model
from .pipeline import ExperimentConfig
from .predictor import leave_one_out_accuracy, predict_batch

log = logging.getLogger("plml")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SOLVER = 3


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with code 2 on bad flags; route through our mapping
    def error(self, message):
        raise _UsageError(message)


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        logging.basicConfig(
            level=logging.DEBUG if args.verbose else logging.INFO,
            format="%(levelname)s %(name)s: %(message)s",
        )
        config = _resolve_config(args)
        return args.func(args, config)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ContractError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="plml",
        description=(
            "Local metric learning: smooth per-instance combinations of "
            "anchor basis metrics with a 1-NN decision rule."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML or JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--threads", type=int, default=None)
        p.add_argument(
            "--trace", default=None, metavar="CSV",
            help="write per-iteration solver progress to this file",
        )
        p.add_argument("-v", "--verbose", action="store_true")
        p.add_argument("--format", dest="data_format", default=None,
                       choices=("csv", "libsvm"))

    def hyper(p):
        p.add_argument("--variant", choices=pipeline.CONFIG_VARIANTS)
        p.add_argument("--m", type=int)
        p.add_argument("--lambda1", type=float)
        p.add_argument("--lambda2", type=float)
        p.add_argument("--alpha1", type=float,
                       help="fix alpha1 instead of searching the grid")
        p.add_argument("--alpha1-grid",
                       help="comma-separated candidates, e.g. 0.1,1,10")
        p.add_argument("--alpha2", type=float)
        p.add_argument("--k1", type=int)
        p.add_argument("--k2", type=int)
        p.add_argument("--knn-k", dest="knn_k", type=int)
        p.add_argument("--pca", dest="use_pca", action="store_true",
                       default=None)
        p.add_argument("--no-pca", dest="use_pca", action="store_false")
        p.add_argument("--variance-target", type=float, dest="variance_target")
        p.add_argument("--pca-position", dest="pca_position",
                       choices=("after_norm", "before_norm"))
        p.add_argument("--no-standardize", dest="standardize",
                       action="store_false", default=None)
        p.add_argument("--no-normalize", dest="normalize",
                       action="store_false", default=None)
        p.add_argument("--graph-kernel", dest="graph_kernel",
                       choices=("self_tuning", "binary"))

    p = sub.add_parser("train", help="learn a model and save it as JSON")
    common(p); hyper(p)
    p.add_argument("--train", dest="train_path", help="training data file")
    p.add_argument("--model-out", default="model.json")
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("predict", help="label new rows with a saved model")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", help="write one label per line here (default stdout)")
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("eval", help="accuracy of a saved model on labeled data")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--loo", action="store_true",
                   help="also report leave-one-out accuracy on the training set")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("cv", help="stratified k-fold cross-validation")
    common(p); hyper(p)
    p.add_argument("--data", dest="train_path", help="dataset file")
    p.add_argument("--folds", dest="n_folds", type=int)
    p.add_argument("--out", help="write per-fold accuracies as CSV")
    p.set_defaults(func=_cmd_cv)

    p = sub.add_parser("sweep", help="accuracy vs. anchor count")
    common(p); hyper(p)
    p.add_argument("--train", dest="train_path")
    p.add_argument("--test", dest="test_path")
    p.add_argument("--folds", dest="n_folds", type=int)
    p.add_argument("--m-values", default="5,10,15,20,25,30,35,40")
    p.add_argument("--variants", default="plml,cblml")
    p.add_argument("--out", help="write rows as CSV")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("viz", help="export local-metric ellipses (2-D models)")
    common(p)
    p.add_argument("--model", required=True)
    p.add_argument("--instances",
                   help="comma-separated training indices (default: all)")
    p.add_argument("--out", required=True,
                   help=".csv, .svg, or a base path for both")
    p.set_defaults(func=_cmd_viz)

    p = sub.add_parser("compare", help="pairwise significance comparison")
    common(p); hyper(p)
    p.add_argument("--train", dest="train_path")
    p.add_argument("--test", dest="test_path")
    p.add_argument("--folds", dest="n_folds", type=int)
    p.add_argument("--methods", default="plml,sml,cblml,euclidean")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out", help="write the report as CSV")
    p.set_defaults(func=_cmd_compare)

    return parser


def _resolve_config(args) -> ExperimentConfig:
    """defaults < config file < explicit command line flags."""
    if getattr(args, "config", None):
        config = ExperimentConfig.from_file(args.config)
    else:
        config = ExperimentConfig()
    overrides = {}
    for f in fields(ExperimentConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            overrides[f.name] = value
    if getattr(args, "alpha1", None) is not None:
        overrides["alpha1_grid"] = (args.alpha1,)
    elif getattr(args, "alpha1_grid", None) is not None:
        overrides["alpha1_grid"] = _parse_floats(args.alpha1_grid, "--alpha1-grid")
    if getattr(args, "n_folds", None) is not None:
        overrides["split"] = "kfold"
    if overrides:
        config = replace(config, **overrides)
    return config.validate()


def _cmd_train(args, config: ExperimentConfig) -> int:
    if config.train_path is None:
        raise ContractError("train needs --train (or train_path in the config)")
    result = pipeline.train_pipeline(config)
    _write_trace(args.trace, result.trace)
    save_model(result.model, args.model_out)
    for stage, seconds in result.timings.items():
        print(f"{stage:>11}: {seconds:8.3f}s")
    if len(config.alpha1_grid) > 1:
        table = ", ".join(
            f"{a:g}: {s:.4f}" for a, s in result.alpha1_scores.items()
        )
        print(f"alpha1 selection ({config.inner_cv_folds}-fold): {table}")
    print(f"alpha1 = {result.alpha1:g}")
    print(f"model written to {args.model_out}")
    return EXIT_OK


def _cmd_predict(args, config: ExperimentConfig) -> int:
    model = load_model(args.model)
    data = load_dataset(args.data, config.data_format)
    pred = predict_batch(model, data.X)
    names = [model.label_names[p - 1] for p in pred]
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("\n".join(names) + "\n")
        print(f"{len(names)} predictions written to {args.out}")
    else:
        print("\n".join(names))
    return EXIT_OK


def _cmd_eval(args, config: ExperimentConfig) -> int:
    model = load_model(args.model)
    data = load_dataset(args.data, config.data_format)
    pred = predict_batch(model, data.X)
    truth = pipeline.align_labels(data, model.label_names)
    acc = accuracy(pred, truth)
    print(f"accuracy: {100.0 * acc:.2f}% ({int(round(acc * data.n))}/{data.n})")
    if args.loo:
        print(f"leave-one-out (training set): "
              f"{100.0 * leave_one_out_accuracy(model):.2f}%")
    return EXIT_OK


def _cmd_cv(args, config: ExperimentConfig) -> int:
    if config.train_path is None:
        raise ContractError("cv needs --data (or train_path in the config)")
    result = pipeline.cross_validate(config)
    for k, acc in enumerate(result.fold_accuracies):
        print(f"fold {k:2d}: {100.0 * acc:.2f}%")
    print(f"mean: {100.0 * result.mean:.2f}%  std: {100.0 * result.std:.2f}%")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("fold,accuracy\n")
            for k, acc in enumerate(result.fold_accuracies):
                fh.write(f"{k},{acc:.6f}\n")
        print(f"per-fold results written to {args.out}")
    return EXIT_OK


def _cmd_sweep(args, config: ExperimentConfig) -> int:
    m_values = [int(v) for v in _parse_floats(args.m_values, "--m-values")]
    variants = tuple(v.strip() for v in args.variants.split(",") if v.strip())
    rows = pipeline.sensitivity_sweep(config, m_values, variants)
    print(f"{'m':>4} {'variant':<8} {'accuracy':>9}")
    for row in rows:
        print(f"{row['m']:>4} {row['variant']:<8} {100.0 * row['accuracy']:>8.2f}%")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write("m,variant,accuracy\n")
            for row in rows:
                fh.write(f"{row['m']},{row['variant']},{row['accuracy']:.6f}\n")
        print(f"sweep written to {args.out}")
    return EXIT_OK


def _cmd_viz(args, config: ExperimentConfig) -> int:
    model = load_model(args.model)
    if args.instances:
        instances = [int(v) for v in _parse_floats(args.instances, "--instances")]
    else:
        instances = list(range(model.n))
    specs = export_ellipses(model, instances, args.out)
    degenerate = sum(1 for s in specs if s.degenerate)
    print(f"{len(specs)} ellipses written to {args.out}"
          + (f" ({degenerate} degenerate)" if degenerate else ""))
    return EXIT_OK


def _cmd_compare(args, config: ExperimentConfig) -> int:
    methods = tuple(v.strip() for v in args.methods.split(",") if v.strip())
    report = pipeline.compare_methods(config, methods, alpha=args.alpha)
    print(report.render_text())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            for row in report.to_csv_rows():
                fh.write(",".join(str(v) for v in row) + "\n")
        print(f"report written to {args.out}")
    return EXIT_OK


def _parse_floats(text, flag):
    try:
        values = tuple(float(v.strip()) for v in str(text).split(",") if v.strip())
    except ValueError as exc:
        raise ContractError(f"{flag}: {exc}") from exc
    if not values:
        raise ContractError(f"{flag}: no values given")
    return values


def _write_trace(path, trace_dict) -> None:
    if not path:
        return
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("stage,iteration,objective,beta,residual\n")
        for stage, rows in trace_dict.items():
            for row in rows:
                fh.write(
                    f"{stage},{row.iteration},{row.objective!r},"
                    f"{row.beta!r},{row.residual!r}\n"
                )


if __name__ == "__main__":
    sys.exit(main())
