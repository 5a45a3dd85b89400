"""Rebuild the CSV files bundled under ``src/hyperblocks/datasets``.

Sources (any local copy works):

* Iris: scikit-learn's ``sklearn/datasets/data/iris.csv``.
* WBC: the MASS ``biopsy`` table (UCI breast-cancer-wisconsin, 699 rows);
  rows with a missing bare-nuclei value are dropped, leaving 683.
* MNIST sample: mlxtend's ``mnist_5k.csv.gz`` (500 images per digit).
  Digits 2 and 7 are kept and each 28x28 image is mean-pooled over 4x4
  tiles to 7x7 = 49 attributes.

Usage::

    python scripts/prepare_datasets.py --iris IRIS.csv --biopsy biopsy.csv \
        --mnist mnist_5k.csv.gz
"""

import argparse
import csv
import gzip
from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "hyperblocks" / "datasets"

IRIS_COLUMNS = ["sepal_length", "sepal_width", "petal_length", "petal_width"]
WBC_COLUMNS = [
    "clump_thickness", "cell_size", "cell_shape", "marginal_adhesion",
    "epithelial_size", "bare_nuclei", "bland_chromatin", "normal_nucleoli",
    "mitoses",
]


def build_iris(src, dst):
    with open(src, newline="") as fh:
        rows = list(csv.reader(fh))
    names = rows[0][2:]
    with open(dst, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(IRIS_COLUMNS + ["species"])
        for r in rows[1:]:
            w.writerow(r[:4] + [names[int(r[4])]])


def build_wbc(src, dst):
    kept = 0
    with open(src, newline="") as fh, open(dst, "w", newline="") as out:
        reader = csv.reader(fh)
        next(reader)
        w = csv.writer(out, lineterminator="\n")
        w.writerow(WBC_COLUMNS + ["class"])
        for r in reader:
            values = r[2:11]
            if "NA" in values:
                continue
            w.writerow(values + [r[11]])
            kept += 1
    return kept


def build_mnist(src, dst, digits=("2", "7")):
    n = 0
    with gzip.open(src, "rt") as fh, open(dst, "w", newline="") as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow([f"p{r}_{c}" for r in range(7) for c in range(7)] + ["digit"])
        for line in fh:
            cells = line.strip().split(",")
            if cells[-1] not in digits:
                continue
            img = np.asarray(cells[:784], dtype=float).reshape(28, 28)
            pooled = img.reshape(7, 4, 7, 4).mean(axis=(1, 3))
            # means of 16 integers are exact in 4 decimals
            w.writerow([f"{v:.4f}".rstrip("0").rstrip(".") for v in pooled.ravel()] + [cells[-1]])
            n += 1
    return n


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--iris", required=True)
    ap.add_argument("--biopsy", required=True)
    ap.add_argument("--mnist", required=True)
    args = ap.parse_args()
    OUT.mkdir(parents=True, exist_ok=True)
    build_iris(args.iris, OUT / "iris.csv")
    print("wbc rows:", build_wbc(args.biopsy, OUT / "wbc.csv"))
    print("mnist 2v7 rows:", build_mnist(args.mnist, OUT / "mnist_2v7_pooled.csv"))


if __name__ == "__main__":
    main()
