"""Full-scale MNIST runs (hours of CPU time; not part of the test suite).

Expects the Kaggle "MNIST in CSV" files: a header row, the digit label in
column 0, then 784 pixel columns.

* ``2v7``: every digit-2 and digit-7 row of the training file, 10-fold CV.
  Reference values: about 44 blocks and 749 clauses per fold, 98.87% mean
  accuracy.
* ``all``: train on the full training file, evaluate on the test file.
  Reference values: 70.21% block coverage, 0.944 overall accuracy.

Usage::

    python scripts/mnist_full.py 2v7 --train mnist_train.csv --seed 0
    python scripts/mnist_full.py all --train mnist_train.csv --test mnist_test.csv
"""

import argparse
import time

import numpy as np

from hyperblocks.dataset import RawDataset, load_csv
from hyperblocks.evaluation import evaluate_fold, per_class_accuracy, render_report, run_cv
from hyperblocks.fallback import FallbackConfig
from hyperblocks.generation import GenerationConfig
from hyperblocks.simplify import SimplifyConfig


def load(path, digits=None) -> RawDataset:
    raw = load_csv(path, label_column=0)
    keep = np.arange(len(raw)) if digits is None else \
        np.flatnonzero(np.isin(np.array(raw.labels), digits))
    labels = tuple(raw.labels[i] for i in keep)
    return RawDataset(raw.rows[keep], labels, raw.attribute_names, tuple(sorted(set(labels))))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("mode", choices=["2v7", "all"])
    ap.add_argument("--train", required=True)
    ap.add_argument("--test")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--removal-threshold", type=int, default=1)
    ap.add_argument("--workers", type=int, default=4)
    args = ap.parse_args()
    gen = GenerationConfig(workers=args.workers)
    simp = SimplifyConfig(removal_threshold=args.removal_threshold)
    t0 = time.perf_counter()
    if args.mode == "2v7":
        rep = run_cv(load(args.train, ["2", "7"]), 10, gen, simp, seed=args.seed)
        print(render_report(rep, "text"))
    else:
        if not args.test:
            ap.error("--test is required for mode 'all'")
        train, test = load(args.train), load(args.test)
        if train.class_names != test.class_names:
            ap.error("train and test files have different label sets")
        raw = RawDataset(np.vstack([train.rows, test.rows]), train.labels + test.labels,
                         train.attribute_names, train.class_names)
        n = len(train)
        f = evaluate_fold(0, raw, np.arange(n), np.arange(n, len(raw)), gen, simp, FallbackConfig())
        print(f"accuracy {f.accuracy:.2f}%  coverage {100 * f.coverage_fraction:.2f}%  "
              f"blocks {f.block_count}  clauses {f.clause_count}")
        for row in per_class_accuracy(f.hb_confusion, f.fallback_confusion, raw.class_names):
            print(row)
    print(f"elapsed {time.perf_counter() - t0:.0f} s")


if __name__ == "__main__":
    main()
