#!/usr/bin/env python3
"""Stability ranking on a user-supplied clinical RR cohort.

The clinical long-term recordings (healthy sinus rhythm vs congestive heart
failure) are not redistributable. Export one RR file per subject (seconds,
one interval per line), list them in a manifest with header
``id,path,label`` (label ``healthy`` or ``chf``), then run

    python scripts/reproduce_with_cohort.py cohort/manifest.csv --out runs/clinical

Reports the fraction of repeats with at most one test error and how many
of the top-10 features are upper-tail (+2) std statistics of F1/F2.
"""

import argparse
from pathlib import Path

from icfrank.cli import _csv
from icfrank.config import RunConfig
from icfrank._util import atomic_write_text
from icfrank.featurize import parse_feature_name
from icfrank.ingest import read_manifest
from icfrank.pipeline import featurize_cohort
from icfrank.select import stability_rank


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0],
                                formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p.add_argument("manifest")
    p.add_argument("--splits", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="runs/clinical")
    args = p.parse_args()

    config = RunConfig(splits=args.splits, seed=args.seed)
    cohort = read_manifest(args.manifest)
    labels = cohort.require_labels()
    print(f"{len(cohort)} subjects: {int((labels == 0).sum())} healthy, {int(labels.sum())} chf")
    matrix = featurize_cohort(cohort, config)
    result = stability_rank(matrix, splits=config.splits,
                            train_counts=(config.train_healthy, config.train_chf),
                            C=config.C, seed=config.seed)

    out = Path(args.out)
    rows = [["errors", "repeats"]] + [[e, n] for e, n in result.error_histogram.items()]
    atomic_write_text(out / "errors.csv", _csv(rows, config, True))
    rows = [["feature", "rank", "frequency"]] + [
        [result.names[k], pos, result.frequency[k]] for pos, k in enumerate(result.ranking, start=1)]
    atomic_write_text(out / "ranking.csv", _csv(rows, config, True))

    low = sum(n for e, n in result.error_histogram.items() if e <= 1) / result.splits
    print(f"repeats with <= 1 of {result.n_test} test errors: {low:.1%}")
    print("test errors -> repeats:", dict(result.error_histogram))
    top = result.top(10)
    ids = [parse_feature_name(n) for n in top]
    tail = [f for f in ids if f.threshold == 2 and f.statistic == "sigma" and f.component in (1, 2)]
    print(f"top-10 features ({len(tail)} are +2 sigma of F1/F2):")
    for name in top:
        print("  ", name)


if __name__ == "__main__":
    main()
