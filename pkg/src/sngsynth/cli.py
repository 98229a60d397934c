"""Command-line front end: train, generate, evaluate, demo-topology.

Every command accepts ``--config FILE`` with a JSON object whose keys match
the long flag names; explicit flags win over the config file, which wins over
built-in defaults. Exit codes: 0 success, 1 usage error, 2 data error,
3 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .core_model import (DataError, Hyperparameters, load_model,
                         normalize_dataset, require_valid, save_model)
from .data_io import (CsvSchema, load_csv, make_ring, write_loss_csv,
                      write_points_csv, write_report_csv, write_synthetic_csv)
from .evaluation import (REGIMES, ExperimentConfig, KNearestNeighbors,
                         format_report_table, register_classifier, run_experiment)
from .neural_gas import quantization_loss, train_supervised, train_unsupervised
from .synthesis import generate


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


# Built-in defaults, also consulted when merging --config files.
TRAIN_DEFAULTS = {
    "neurons": 10, "epochs": 100, "eta_start": 0.5, "eta_end": 0.01,
    "lambda_start": None, "lambda_end": 0.01, "noise_level": 0.1,
    "batch_size": 32, "seed": 0,
}
GENERATE_DEFAULTS = {
    "count": 2000, "noise_level": None, "seed": 0, "selection": "uniform",
    "no_clip": False,
}
EVALUATE_DEFAULTS = {
    **TRAIN_DEFAULTS,
    "train_fraction": 0.7, "runs": 5, "regimes": ",".join(REGIMES),
    "classifier": "logreg", "knn_k": 5, "synthetic_count": 2000,
}
DEMO_DEFAULTS = {
    "points": 200, "neurons": 150, "epochs": 300, "radius": 1.0,
    "jitter": 0.05, "eta_start": 0.5, "eta_end": 0.01, "seed": 0,
}


def _add_hyper_flags(p, defaults):
    p.add_argument("--neurons", type=int, help=f"prototypes per class (default {defaults['neurons']})")
    p.add_argument("--epochs", type=int, help=f"training epochs (default {defaults['epochs']})")
    p.add_argument("--eta-start", type=float, dest="eta_start",
                   help=f"initial learning rate (default {defaults['eta_start']})")
    p.add_argument("--eta-end", type=float, dest="eta_end",
                   help=f"final learning rate (default {defaults['eta_end']})")
    p.add_argument("--lambda-start", type=float, dest="lambda_start",
                   help="initial neighborhood range (default neurons/2)")
    p.add_argument("--lambda-end", type=float, dest="lambda_end",
                   help=f"final neighborhood range (default {defaults['lambda_end']})")
    p.add_argument("--noise-level", type=float, dest="noise_level",
                   help=f"generation noise sigma in normalized units (default {defaults['noise_level']})")
    p.add_argument("--batch-size", type=int, dest="batch_size",
                   help=f"loss-logging cadence, does not change training math (default {defaults['batch_size']})")


def _add_schema_flags(p):
    p.add_argument("--schema-config", help="JSON file with keys label_column, "
                   "feature_columns, has_header, delimiter")
    p.add_argument("--label-column", dest="label_column",
                   help="label column name or 0-based index (default: last column)")
    p.add_argument("--feature-columns", dest="feature_columns",
                   help="comma-separated feature column names or indices (default: all non-label)")
    p.add_argument("--no-header", dest="no_header", action="store_const", const=True,
                   help="treat the first row as data, not a header")
    p.add_argument("--delimiter", help="field delimiter (default ',')")


def build_parser() -> _Parser:
    parser = _Parser(prog="sngsynth",
                     description="Prototype-codebook training, synthetic tabular "
                                 "data generation, and evaluation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[], help="fit per-class codebooks on a CSV",
                       description="Load a labeled CSV, min-max normalize, train "
                                   "per-class codebooks, and write the model JSON, "
                                   "a loss CSV, and a loss-curve figure.")
    p.add_argument("--data", required=True, help="labeled CSV file")
    _add_schema_flags(p)
    _add_hyper_flags(p, TRAIN_DEFAULTS)
    p.add_argument("--seed", type=int, help=f"RNG seed (default {TRAIN_DEFAULTS['seed']})")
    p.add_argument("--out", required=True, help="model JSON output path")
    p.add_argument("--loss-out", dest="loss_out",
                   help="loss CSV output path (default: <out>_loss.csv)")
    p.add_argument("--config", help="JSON config file; explicit flags win")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="sample synthetic data from a model",
                       description="Load a trained model and write a synthetic CSV "
                                   "plus a provenance sidecar.")
    p.add_argument("--model", required=True, help="model JSON from the train command")
    p.add_argument("--count", type=int, help=f"total samples, split equally across "
                   f"classes (default {GENERATE_DEFAULTS['count']})")
    p.add_argument("--noise-level", type=float, dest="noise_level",
                   help="override the model's trained noise sigma")
    p.add_argument("--seed", type=int, help=f"RNG seed (default {GENERATE_DEFAULTS['seed']})")
    p.add_argument("--selection", choices=["uniform", "round_robin"],
                   help="per-sample neuron selection (default uniform)")
    p.add_argument("--no-clip", dest="no_clip", action="store_const", const=True,
                   help="do not clamp samples to the normalized [0,1] range")
    p.add_argument("--out", required=True, help="synthetic CSV output path")
    p.add_argument("--config", help="JSON config file; explicit flags win")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="run the split/train/generate/score protocol",
                       description="Repeated stratified holdout: per run, train the "
                                   "codebook model, generate synthetic data, fit the "
                                   "downstream classifier per regime, and score on "
                                   "the held-out test split.")
    p.add_argument("--data", required=True, help="labeled CSV file")
    _add_schema_flags(p)
    _add_hyper_flags(p, EVALUATE_DEFAULTS)
    p.add_argument("--train-fraction", type=float, dest="train_fraction",
                   help=f"train split fraction (default {EVALUATE_DEFAULTS['train_fraction']})")
    p.add_argument("--runs", type=int, help=f"independent runs (default {EVALUATE_DEFAULTS['runs']})")
    p.add_argument("--regimes", help="comma list from {original,synthetic_only,mixed} "
                   "(default all three)")
    p.add_argument("--classifier", help="downstream classifier: logreg or knn "
                   f"(default {EVALUATE_DEFAULTS['classifier']})")
    p.add_argument("--knn-k", type=int, dest="knn_k",
                   help=f"k for the knn classifier (default {EVALUATE_DEFAULTS['knn_k']})")
    p.add_argument("--synthetic-count", type=int, dest="synthetic_count",
                   help=f"synthetic samples per run (default {EVALUATE_DEFAULTS['synthetic_count']})")
    p.add_argument("--seed", type=int, help="base seed; run r uses seed + r (default 0)")
    p.add_argument("--report", required=True, help="report JSON output path")
    p.add_argument("--config", help="JSON config file; explicit flags win")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("demo-topology", help="unsupervised prototype fit on a ring",
                       description="Fit a single codebook to ring-shaped points and "
                                   "export checkpoint CSVs plus an SVG overlay.")
    p.add_argument("--points", type=int, help=f"number of target points (default {DEMO_DEFAULTS['points']})")
    p.add_argument("--neurons", type=int, help=f"number of prototypes (default {DEMO_DEFAULTS['neurons']})")
    p.add_argument("--epochs", type=int, help=f"training epochs (default {DEMO_DEFAULTS['epochs']})")
    p.add_argument("--radius", type=float, help=f"ring radius (default {DEMO_DEFAULTS['radius']})")
    p.add_argument("--jitter", type=float, help=f"radial jitter sigma (default {DEMO_DEFAULTS['jitter']})")
    p.add_argument("--eta-start", type=float, dest="eta_start",
                   help=f"initial learning rate (default {DEMO_DEFAULTS['eta_start']})")
    p.add_argument("--eta-end", type=float, dest="eta_end",
                   help=f"final learning rate (default {DEMO_DEFAULTS['eta_end']})")
    p.add_argument("--seed", type=int, help="RNG seed (default 0)")
    p.add_argument("--out", required=True, help="output directory for checkpoints and figure")
    p.add_argument("--config", help="JSON config file; explicit flags win")
    p.set_defaults(func=cmd_demo_topology)

    return parser


def _merged(args, defaults: dict) -> dict:
    """defaults < --config file < explicit flags."""
    merged = dict(defaults)
    config_path = getattr(args, "config", None)
    if config_path:
        path = Path(config_path)
        if not path.exists():
            raise DataError(f"config file not found: {path}")
        try:
            doc = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"config file {path} is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise DataError(f"config file {path} must contain a JSON object")
        unknown = set(doc) - set(defaults)
        if unknown:
            raise DataError(f"config file {path} has unknown keys: {sorted(unknown)}")
        merged.update(doc)
    for key in defaults:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    return merged


def _schema_from_args(args) -> CsvSchema:
    schema = (CsvSchema.from_json_file(args.schema_config)
              if args.schema_config else CsvSchema())
    def column(v):
        try:
            return int(v)
        except (TypeError, ValueError):
            return v
    kwargs = {}
    if args.label_column is not None:
        kwargs["label_column"] = column(args.label_column)
    if args.feature_columns is not None:
        kwargs["feature_columns"] = [column(c) for c in args.feature_columns.split(",")]
    if args.no_header:
        kwargs["has_header"] = False
    if args.delimiter is not None:
        kwargs["delimiter"] = args.delimiter
    if kwargs:
        from dataclasses import replace
        schema = replace(schema, **kwargs)
    return schema


def _hyper_from(opts: dict) -> Hyperparameters:
    try:
        return Hyperparameters(
            neurons_per_class=opts["neurons"], max_iter=opts["epochs"],
            eta_start=opts["eta_start"], eta_end=opts["eta_end"],
            lambda_start=opts["lambda_start"], lambda_end=opts["lambda_end"],
            noise_level=opts.get("noise_level", 0.1),
            batch_size=opts.get("batch_size", 32), seed=opts["seed"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_dataset(args, schema: CsvSchema):
    dataset = load_csv(args.data, schema)
    require_valid(dataset)
    return dataset


def cmd_train(args) -> int:
    opts = _merged(args, {**TRAIN_DEFAULTS, "loss_out": None})
    dataset = _load_dataset(args, _schema_from_args(args))
    hyper = _hyper_from(opts)

    t0 = time.perf_counter()
    model = train_supervised(normalize_dataset(dataset), hyper)
    elapsed = time.perf_counter() - t0

    out = Path(args.out)
    save_model(model, out)
    loss_out = Path(opts["loss_out"]) if opts["loss_out"] else out.with_name(out.stem + "_loss.csv")
    write_loss_csv(model.loss_history, loss_out)
    from . import figures
    figures.render_loss_curve(model.loss_history, out.with_name(out.stem + "_loss.png"))

    final = f"{model.loss_history[-1]:.6g}" if model.loss_history else "n/a (0 epochs)"
    print(f"trained {dataset.num_classes} classes x {hyper.neurons_per_class} neurons "
          f"on {dataset.n_samples} samples ({dataset.dim} features)")
    print(f"final loss: {final}  train time: {elapsed * 1000.0:.1f} ms")
    print(f"model: {out}  loss csv: {loss_out}")
    return 0


def cmd_generate(args) -> int:
    opts = _merged(args, GENERATE_DEFAULTS)
    model = load_model(args.model)
    if opts["no_clip"]:
        from dataclasses import replace
        model = replace(model, hyper=replace(model.hyper, clip_to_range=False))
    try:
        batch = generate(model, opts["count"], opts["seed"],
                         noise_level=opts["noise_level"], selection=opts["selection"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    out = Path(args.out)
    prov = out.with_name(out.stem + "_provenance.csv")
    write_synthetic_csv(batch, out, provenance_path=prov)
    counts = ", ".join(f"{name}: {int(n)}" for name, n
                       in zip(batch.class_names, batch.class_counts()))
    print(f"generated {batch.n_samples} samples ({counts})")
    print(f"csv: {out}  provenance: {prov}")
    return 0


def cmd_evaluate(args) -> int:
    opts = _merged(args, EVALUATE_DEFAULTS)
    dataset = _load_dataset(args, _schema_from_args(args))
    hyper = _hyper_from(opts)
    if opts["classifier"] == "knn":
        k = int(opts["knn_k"])
        register_classifier("knn", lambda: KNearestNeighbors(k=k))
    try:
        config = ExperimentConfig(
            train_fraction=opts["train_fraction"], runs=opts["runs"],
            regimes=tuple(r.strip() for r in opts["regimes"].split(",") if r.strip()),
            classifier=opts["classifier"], seed=opts["seed"],
            synthetic_samples=opts["synthetic_count"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    report = run_experiment(dataset, hyper, config)

    out = Path(args.report)
    out.write_text(report.to_json() + "\n")
    write_report_csv(report, out.with_name(out.stem + "_metrics.csv"))
    from . import figures
    figures.render_report_chart(report, out.with_name(out.stem + "_chart.png"))
    print(format_report_table(report))
    print(f"\nreport: {out}")
    return 0


def cmd_demo_topology(args) -> int:
    opts = _merged(args, DEMO_DEFAULTS)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)

    try:
        points = make_ring(opts["points"], radius=opts["radius"],
                           jitter=opts["jitter"], seed=opts["seed"])
        hyper = Hyperparameters(
            neurons_per_class=opts["neurons"], max_iter=opts["epochs"],
            eta_start=opts["eta_start"], eta_end=opts["eta_end"],
            seed=opts["seed"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    epochs = opts["epochs"]
    checkpoints = sorted({round(i * epochs / 4) for i in range(5)})
    snapshots: dict = {}

    def hook(epoch, codebook):
        if epoch in checkpoints:
            snapshots[epoch] = codebook

    codebook, losses = train_unsupervised(points, opts["neurons"], hyper,
                                          snapshot_hook=hook)

    write_points_csv(points, outdir / "targets.csv")
    for epoch in checkpoints:
        write_points_csv(snapshots[epoch], outdir / f"neurons_epoch_{epoch:04d}.csv")
    write_loss_csv(losses, outdir / "loss.csv")
    from . import figures
    figures.render_topology(points, codebook, outdir / "topology.svg",
                            title=f"{opts['neurons']} prototypes on {opts['points']} targets")

    labels = np.zeros(points.shape[0], dtype=np.int64)
    initial_qe = quantization_loss(points, labels, [snapshots[checkpoints[0]]])
    final_qe = quantization_loss(points, labels, [codebook])
    print(f"checkpoints at epochs {checkpoints} written to {outdir}")
    print(f"quantization error: initial {initial_qe:.6g} -> final {final_qe:.6g}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - safety net
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
