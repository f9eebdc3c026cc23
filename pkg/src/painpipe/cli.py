"""Command line driver.

Subcommands: gen-synthetic, extract, strain, fuse, select, train, evaluate,
compare, run, report. Exit codes: 0 success, 1 usage error, 2 data or
validation error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .classifiers import load_model, make_classifier, save_model
from .cnn.network import TapRequest
from .config import PipelineConfig, SplitConfig
from .errors import ContractError, TrainingError, WeightFormatError, WeightValidationError
from .evaluation import accuracy, auc, delong_test, format_percent
from .featurematrix import FeatureMatrix
from .manifest import DatasetManifest
from .pipeline import (
    extract_deep_features,
    extract_strain_matrix,
    fuse_matrices,
    resolve_architecture,
    run_single,
    sweep_records,
)
from .report import (
    RunReport,
    load_scores,
    make_provenance,
    render_text,
    save_scores,
)
from .selection import make_selector, write_ranking
from .synthetic import generate_synthetic_dataset

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3

DATA_ERRORS = (ContractError, WeightFormatError, WeightValidationError, TrainingError,
               FileNotFoundError, EOFError, json.JSONDecodeError)

logger = logging.getLogger("painpipe")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    if getattr(args, "seed", None) is not None:
        config = replace(config, split=SplitConfig(config.split.test_fraction, args.seed))
    return config


def _report_failures(failures) -> None:
    if failures:
        print(f"warning: {len(failures)} entries failed:", file=sys.stderr)
        for failure in failures:
            print(f"  [{failure.stage}] {failure.video_id}: {failure.reason}",
                  file=sys.stderr)


def _slug(text: str) -> str:
    return text.lower().replace(" ", "")


def cmd_gen_synthetic(args) -> int:
    seed = args.seed if args.seed is not None else 0
    manifest_path = generate_synthetic_dataset(
        args.out, subjects=args.subjects, frames_per_video=args.frames, seed=seed)
    print(f"wrote {manifest_path}")
    return EXIT_OK


def cmd_extract(args) -> int:
    config = _load_config(args)
    manifest = DatasetManifest.load(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    matrices, failures = extract_deep_features(
        manifest, config, args.weights, jobs=args.jobs)
    arch = resolve_architecture(config.architecture)
    for tap, matrix in matrices.items():
        name = f"deep_{arch.name}_{_slug(tap.layer)}_{tap.phase.value.lower()}.csv"
        matrix.save(out_dir / name)
        print(f"wrote {out_dir / name} ({matrix.n_rows} rows x {matrix.width} features)")
        if matrix.n_rows == 0:
            print("warning: empty feature matrix", file=sys.stderr)
    if config.fusion is not None:
        strain, strain_failures = extract_strain_matrix(manifest, config)
        failures += strain_failures
        strain.save(out_dir / "strain.csv")
        print(f"wrote {out_dir / 'strain.csv'} ({strain.n_rows} rows)")
    _report_failures(failures)
    return EXIT_OK


def cmd_strain(args) -> int:
    config = _load_config(args)
    manifest = DatasetManifest.load(args.manifest)
    matrix, failures = extract_strain_matrix(manifest, config)
    matrix.save(args.out)
    print(f"wrote {args.out} ({matrix.n_rows} rows x {matrix.width} features)")
    _report_failures(failures)
    return EXIT_OK


def cmd_fuse(args) -> int:
    config = _load_config(args)
    if config.fusion is None:
        raise ContractError("config.fusion must be set for the fuse command")
    deep = FeatureMatrix.load(args.deep)
    strain = FeatureMatrix.load(args.strain)
    fused = fuse_matrices(deep, strain, config)
    fused.save(args.out)
    print(f"wrote {args.out} ({fused.n_rows} rows x {fused.width} features)")
    return EXIT_OK


def cmd_select(args) -> int:
    config = _load_config(args)
    matrix = FeatureMatrix.load(args.matrix)
    selector = make_selector(
        config.selector.method, config.selector.n,
        feature_names=list(matrix.feature_names),
        bins=config.selector.bins, k_neighbors=config.selector.k_neighbors,
        seed=config.split.seed,
    )
    selector.fit(matrix.X, matrix.labels)
    write_ranking(args.out, selector.ranking_)
    print(f"wrote {args.out}")
    if args.reduced:
        matrix.select_features(selector.selected_names()).save(args.reduced)
        print(f"wrote {args.reduced}")
    return EXIT_OK


def cmd_train(args) -> int:
    config = _load_config(args)
    matrix = FeatureMatrix.load(args.matrix)
    model = make_classifier(config.classifier.kind, config.classifier.params)
    model.fit(matrix.X, matrix.labels)
    save_model(args.out, model, list(matrix.feature_names))
    print(f"wrote {args.out} ({config.classifier.kind}, {matrix.width} features)")
    return EXIT_OK


def cmd_evaluate(args) -> int:
    matrix = FeatureMatrix.load(args.matrix)
    model, names = load_model(args.model)
    if list(matrix.feature_names) != names:
        raise ContractError(
            "matrix features disagree with the model's training features"
        )
    predictions = model.predict(matrix.X)
    scores = model.score_samples(matrix.X)
    save_scores(args.out, matrix.instance_ids, matrix.labels, scores, predictions)
    acc = accuracy(predictions, matrix.labels)
    auc_value = auc(scores, matrix.labels) if len(np.unique(matrix.labels)) == 2 else None
    metrics = {"accuracy": acc, "accuracy_pct": format_percent(acc),
               "auc": auc_value, "n_instances": matrix.n_rows}
    if args.metrics:
        with open(args.metrics, "w", encoding="utf-8") as f:
            json.dump(metrics, f, indent=2, sort_keys=True)
            f.write("\n")
    auc_text = "n/a" if auc_value is None else f"{auc_value:.3f}"
    print(f"accuracy {metrics['accuracy_pct']}%  auc {auc_text}")
    return EXIT_OK


def cmd_compare(args) -> int:
    ids_a, labels_a, scores_a, _ = load_scores(args.a)
    ids_b, labels_b, scores_b, _ = load_scores(args.b)
    if ids_a != ids_b or not np.array_equal(labels_a, labels_b):
        raise ContractError("score sets cover different instances or labels; "
                            "comparisons need a shared split")
    result = delong_test(labels_a, scores_a, scores_b)
    record = {
        "a": str(args.a), "b": str(args.b),
        "auc_a": result.auc_a, "auc_b": result.auc_b,
        "z": result.z, "p_value": result.p_value,
        "significant": result.significant,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            json.dump(record, f, indent=2, sort_keys=True)
            f.write("\n")
    print(f"AUC {result.auc_a:.3f} vs {result.auc_b:.3f}  z={result.z:.3f}  "
          f"p={result.p_value:.4f}  significant={result.significant}")
    return EXIT_OK


def cmd_run(args) -> int:
    config = _load_config(args)
    manifest = DatasetManifest.load(args.manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    if config.sweep is not None:
        records, failures = sweep_records(manifest, config, args.weights, jobs=args.jobs)
    else:
        record, failures = run_single(manifest, config, args.weights, jobs=args.jobs)
        records = [record]

    report = RunReport(
        rows=[r.row for r in records],
        provenance=make_provenance(config.config_hash(), config.split.seed,
                                   {"n_videos": len(manifest)}),
    )
    scores_dir = out_dir / "scores"
    scores_dir.mkdir(exist_ok=True)
    for record in records:
        row = record.row
        name = (f"{row['architecture']}_{_slug(row['tap']['layer'])}_"
                f"{row['tap']['phase'].lower()}.csv")
        save_scores(scores_dir / name, record.instance_ids, record.labels,
                    record.scores, record.predictions)
    report_path = out_dir / "report.json"
    report.save(report_path)
    print(render_text(report))
    print(f"wrote {report_path}")
    _report_failures(failures)
    return EXIT_OK


def cmd_report(args) -> int:
    report = RunReport.load(args.report)
    text = render_text(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="painpipe", description=__doc__)
    parser.add_argument("--version", action="version", version=f"painpipe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, handler, **kwargs):
        p = sub.add_parser(name, **kwargs)
        p.set_defaults(handler=handler)
        return p

    p = add("gen-synthetic", cmd_gen_synthetic, help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--subjects", type=int, default=8)
    p.add_argument("--frames", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)

    p = add("extract", cmd_extract, help="deep (and configured strain) features")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)

    p = add("strain", cmd_strain, help="strain features only")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)

    p = add("fuse", cmd_fuse, help="fuse strain and deep feature matrices")
    p.add_argument("--deep", required=True)
    p.add_argument("--strain", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)

    p = add("select", cmd_select, help="rank features on a matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--reduced", default=None, help="also write the reduced matrix")
    p.add_argument("--seed", type=int, default=None)

    p = add("train", cmd_train, help="train a classifier on a matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)

    p = add("evaluate", cmd_evaluate, help="apply a model, write scores")
    p.add_argument("--matrix", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metrics", default=None)

    p = add("compare", cmd_compare, help="DeLong comparison of two score files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out", default=None)

    p = add("run", cmd_run, help="full pipeline (single config or sweep)")
    p.add_argument("--manifest", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--weights", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--seed", type=int, default=None)

    p = add("report", cmd_report, help="render a report as a text table")
    p.add_argument("--report", required=True)
    p.add_argument("--out", default=None)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.handler(args)
    except DATA_ERRORS as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # pragma: no cover - defensive
        logger.exception("internal error")
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
