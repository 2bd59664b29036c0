"""Batch command line: ``icfrank <command> [flags]``.

Commands: synth, decompose, featurize, rank, correlate, classify. Errors
print one line ``error: <kind>: <message>`` on stderr and exit with 1.
"""

import argparse
import csv
import io
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import analyze
from ._util import atomic_write_text, fmt
from .config import RunConfig
from .errors import PipelineError, ValidationError
from .ingest import LABEL_NAMES, MAX_DROP_FRACTION, read_manifest, write_manifest, write_rr
from .pipeline import decompose_cohort, featurize_cohort
from .select import FeatureMatrix, fit_model, format_model, parse_model, predict, stability_rank
from .synth import DEFAULT_LENGTH, gen_cohort

DECOMPOSITION_KEYS = ("window", "num_modes", "subseries", "tol", "max_iter")


def _csv(rows, config, emit_config):
    """CSV text from row lists; fields with commas (feature names) get quoted."""
    buf = io.StringIO()
    if emit_config:
        buf.write("\n".join(config.header_lines()) + "\n")
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _read_csv(path):
    """Rows of a CSV file plus its ``# key=value`` header as a dict."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        lines = fh.read().splitlines()
    header = {}
    for line in lines:
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition("=")
            header[key] = value
    body = [line for line in lines if line and not line.startswith("#")]
    return list(csv.reader(body)), header


def _label_text(label):
    return "" if label is None else str(int(label))


def format_feature_matrix(matrix):
    rows = [["id", "label"] + list(matrix.names)]
    labels = matrix.labels if matrix.labels is not None else [None] * len(matrix.ids)
    for sid, lab, values in zip(matrix.ids, labels, matrix.values):
        rows.append([sid, _label_text(lab)] + [fmt(v) for v in values])
    return rows


def read_feature_matrix(path):
    """Load a feature-matrix CSV; ``# key=value`` header lines are returned too."""
    rows, header = _read_csv(path)
    if not rows or rows[0][:2] != ["id", "label"]:
        raise ValidationError(f"{path}: feature matrix must start with id,label columns")
    names = rows[0][2:]
    ids, labels, values = [], [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(names) + 2:
            raise ValidationError(f"{path}:{lineno}: expected {len(names) + 2} fields")
        ids.append(row[0])
        labels.append(None if row[1] == "" else int(row[1]))
        values.append([float(v) if v != "" else np.nan for v in row[2:]])
    labels = None if any(lab is None for lab in labels) else np.array(labels)
    matrix = FeatureMatrix(ids=ids, names=names,
                           values=np.array(values, dtype=float).reshape(len(ids), len(names)),
                           labels=labels)
    return matrix, header


def cmd_synth(args, config):
    out = Path(args.out)
    cohort = gen_cohort(args.healthy, args.chf, seed=config.seed, length=args.length)
    rows = []
    for s in cohort:
        rel = f"rr/{s.id}.txt"
        write_rr(out / rel, s)
        rows.append((s.id, rel, s.label))
    write_manifest(out / "manifest.csv", rows,
                   config.header_lines() if args.emit_config else ())


def cmd_decompose(args, config):
    cohort = read_manifest(args.manifest, args.max_drop_fraction)
    out = Path(args.out)
    for s, d in zip(cohort, decompose_cohort(cohort, config)):
        cols = ["t", "x"] + [f"F{i}" for i in range(1, d.num_modes + 1)] + ["R"]
        data = np.column_stack([s.values] + d.components())
        rows = [cols] + [[str(t)] + [fmt(v) for v in row] for t, row in enumerate(data)]
        atomic_write_text(out / f"{s.id}.csv", _csv(rows, config, args.emit_config))


def cmd_featurize(args, config):
    cohort = read_manifest(args.manifest, args.max_drop_fraction)
    matrix = featurize_cohort(cohort, config)
    atomic_write_text(args.out, _csv(format_feature_matrix(matrix), config, args.emit_config))


def cmd_rank(args, config):
    matrix, header = read_feature_matrix(args.features)
    if matrix.labels is None:
        raise ValidationError("rank needs every subject labeled")
    result = stability_rank(matrix, splits=config.splits,
                            train_counts=(config.train_healthy, config.train_chf),
                            C=config.C, seed=config.seed, top=args.top, step=args.step)
    out = Path(args.out)
    rows = [["feature", "rank", "frequency"]]
    rows += [[result.names[k], pos, result.frequency[k]]
             for pos, k in enumerate(result.ranking, start=1)]
    atomic_write_text(out / "ranking.csv", _csv(rows, config, args.emit_config))
    rows = [["errors", "repeats"]] + [[e, n] for e, n in result.error_histogram.items()]
    atomic_write_text(out / "errors.csv", _csv(rows, config, args.emit_config))

    # decomposition settings travel with the model so classify can featurize
    settings = {k: header.get(k, getattr(config, k)) for k in DECOMPOSITION_KEYS}
    model = fit_model(matrix, result.top(args.top), C=config.C, seed=config.seed, settings=settings)
    atomic_write_text(out / "model.txt", format_model(model))
    print(f"mean test accuracy {result.mean_accuracy:.4f} over {result.splits} splits; "
          f"top: {', '.join(result.top(args.top))}")


def cmd_correlate(args, config):
    cohort = read_manifest(args.manifest, args.max_drop_fraction)
    labels = cohort.require_labels()
    decomps = decompose_cohort(cohort, config)
    out = Path(args.out)

    def write(name, rows):
        atomic_write_text(out / name, _csv(rows, config, args.emit_config))

    def curve_lines(curve):
        return [["x", "r"]] + [[fmt(x), fmt(r)] for x, r in zip(curve.x_values, curve.r_values)]

    write("scatter.csv", [["id", "mean", "variance", "label"]] + [
        [sid, fmt(m), fmt(v), _label_text(lab)]
        for sid, m, v, lab in analyze.mean_variance_scatter(cohort)])

    for comp in range(1, min(2, config.num_modes) + 1):
        for thr in (1, 2, -1, -2):
            means, stds = analyze.order_stat_correlations(decomps, labels, comp, thr, config.subseries)
            write(f"orderstat_F{comp}_m_{thr:+d}.csv", curve_lines(means))
            write(f"orderstat_F{comp}_sigma_{thr:+d}.csv", curve_lines(stds))

    comp = args.component
    fractions, ref = analyze.outlier_balance(decomps, labels, comp)
    write("balance.csv", [["class", "upper", "lower", "reference"]] + [
        [LABEL_NAMES[lab], fmt(up), fmt(lo), fmt(ref)] for lab, (up, lo) in fractions.items()])

    grid = np.linspace(0.0, 2.0, args.v_points)
    write("vsweep.csv", curve_lines(analyze.v_sweep(decomps, labels, comp, grid, config.subseries)))


def cmd_classify(args, config):
    with open(args.model, "r", encoding="utf-8") as fh:
        model = parse_model(fh.read())
    overrides = {}
    for key, value in model.settings.items():
        if key in DECOMPOSITION_KEYS:
            overrides[key] = float(value) if key == "tol" else int(value)
    run = RunConfig(**{**asdict(config), **overrides})
    cohort = read_manifest(args.manifest, args.max_drop_fraction)
    matrix = featurize_cohort(cohort, run)
    rows = [["id", "label", "margin"]]
    for sid, values in zip(matrix.ids, matrix.values):
        label, margin = predict(model, dict(zip(matrix.names, values)))
        rows.append([sid, LABEL_NAMES[1 if label > 0 else 0], fmt(margin)])
    atomic_write_text(args.out, _csv(rows, run, args.emit_config))


def _shared_flags():
    p = argparse.ArgumentParser(add_help=False)
    d = RunConfig()
    g = p.add_argument_group("run configuration")
    g.add_argument("--window", type=int, default=d.window, help="mask half-width N")
    g.add_argument("--modes", type=int, default=d.num_modes, help="number of mode functions m")
    g.add_argument("--subseries", type=int, default=d.subseries, help="number of blocks K")
    g.add_argument("--tol", type=float, default=d.tol, help="stopping tolerance of the filter iteration")
    g.add_argument("--max-iter", type=int, default=d.max_iter, help="iteration cap per mode")
    g.add_argument("--c", type=float, default=d.C, help="SVM soft-margin penalty C")
    g.add_argument("--splits", type=int, default=d.splits, help="random train/test repeats")
    g.add_argument("--seed", type=int, default=d.seed, help="root random seed")
    g.add_argument("--train-healthy", type=int, default=d.train_healthy, help="healthy subjects per training split")
    g.add_argument("--train-chf", type=int, default=d.train_chf, help="CHF subjects per training split")
    g.add_argument("--max-drop-fraction", type=float, default=MAX_DROP_FRACTION,
                   help="reject an RR file when more than this fraction of lines are not numbers")
    g.add_argument("--emit-config", action="store_true", help="prefix output CSVs with the resolved configuration")
    return p


def build_parser():
    fmt_cls = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="icfrank", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    shared = _shared_flags()

    p = sub.add_parser("synth", parents=[shared], formatter_class=fmt_cls,
                       help="write a synthetic cohort (RR files + manifest)")
    p.add_argument("--healthy", type=int, default=72, help="number of healthy subjects")
    p.add_argument("--chf", type=int, default=43, help="number of CHF subjects")
    p.add_argument("--length", type=int, default=DEFAULT_LENGTH, help="beats per subject")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("decompose", parents=[shared], formatter_class=fmt_cls,
                       help="per-subject decomposition CSVs")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("featurize", parents=[shared], formatter_class=fmt_cls,
                       help="feature-matrix CSV")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("rank", parents=[shared], formatter_class=fmt_cls,
                       help="stability ranking, error histogram and model file")
    p.add_argument("features", help="feature-matrix CSV from featurize")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--top", type=int, default=10, help="features kept per split")
    p.add_argument("--step", type=int, default=1, help="features eliminated per RFE round")
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("correlate", parents=[shared], formatter_class=fmt_cls,
                       help="scatter, order-statistic, balance and v-sweep CSVs")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--component", type=int, default=1, help="mode function for balance and v-sweep")
    p.add_argument("--v-points", type=int, default=21, help="grid points on [0, 2] for the v-sweep")
    p.set_defaults(func=cmd_correlate)

    p = sub.add_parser("classify", parents=[shared], formatter_class=fmt_cls,
                       help="predict labels with a model file from rank")
    p.add_argument("model")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="output CSV path")
    p.set_defaults(func=cmd_classify)
    return parser


def config_from_args(args):
    return RunConfig(window=args.window, num_modes=args.modes, subseries=args.subseries,
                     tol=args.tol, max_iter=args.max_iter, C=args.c, splits=args.splits,
                     seed=args.seed, train_healthy=args.train_healthy, train_chf=args.train_chf)


def _one_line(exc):
    return " ".join(str(exc).split())


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args, config_from_args(args))
    except PipelineError as exc:
        print(f"error: {exc.kind}: {_one_line(exc)}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: io: {_one_line(exc)}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
