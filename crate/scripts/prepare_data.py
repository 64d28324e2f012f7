#!/usr/bin/env python3
"""Regenerate the bundled benchmark datasets in LIBSVM text format.

The four datasets under data/ are classic UCI / Statlog benchmarks, taken from
the CRAN `mlbench` R package (version 2.1-6), which preserves the original UCI
row order:

  satimage  (Statlog Landsat Satellite): rows 1..4435 are the original
            training set, rows 4436..6435 the original test set.
            Labels keep the original coding {1,2,3,4,5,7}.
  letter    (Letter Recognition): rows 1..15000 train, 15001..20000 test
            (the Statlog split). Labels 1..26 for A..Z.
  diabetes  (Pima Indians Diabetes): 768 rows, labels pos=1 / neg=0;
            seeded 537/231 train/test split (floor(0.7 N), default_rng(0)).
  sonar     (Connectionist Bench Sonar): 208 rows, labels M=1 / R=0;
            seeded 145/63 train/test split, same scheme.

Requires: `pip install rdata` plus the mlbench_2.1-6.tar.gz source package
extracted next to this script (https://cran.r-project.org/src/contrib/).

Zero-valued features are omitted (standard sparse LIBSVM convention).
"""
import sys
from pathlib import Path

import rdata

MLBENCH = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("mlbench")
OUT = Path(__file__).resolve().parent.parent / "data"

SAT_LABELS = {
    "red soil": 1,
    "cotton crop": 2,
    "grey soil": 3,
    "damp grey soil": 4,
    "vegetation stubble": 5,
    "very damp grey soil": 7,
}


def fmt(v: float) -> str:
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def write_libsvm(path: Path, features, labels):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for row, label in zip(features, labels):
            parts = [fmt(label)]
            for idx, val in enumerate(row, start=1):
                if val != 0.0:
                    parts.append(f"{idx}:{fmt(val)}")
            f.write(" ".join(parts) + "\n")
    print(f"wrote {path} ({len(labels)} rows)")


def load(name: str):
    return rdata.read_rda(MLBENCH / "data" / f"{name}.rda")[name]


def main():
    sat = load("Satellite")
    x = sat[[f"x.{i}" for i in range(1, 37)]].to_numpy(dtype=float)
    y = [SAT_LABELS[c] for c in sat["classes"]]
    write_libsvm(OUT / "satimage.train.svm", x[:4435], y[:4435])
    write_libsvm(OUT / "satimage.test.svm", x[4435:], y[4435:])

    letter = load("LetterRecognition")
    x = letter[[c for c in letter.columns if c != "lettr"]].to_numpy(dtype=float)
    y = [ord(c) - ord("A") + 1 for c in letter["lettr"]]
    write_libsvm(OUT / "letter.train.svm", x[:15000], y[:15000])
    write_libsvm(OUT / "letter.test.svm", x[15000:], y[15000:])

    import numpy as np

    def split_70_30(name, x, y):
        rng = np.random.default_rng(0)
        order = rng.permutation(len(y))
        n_train = int(len(y) * 0.7)
        tr, te = order[:n_train], order[n_train:]
        write_libsvm(OUT / f"{name}.train.svm", x[tr], [y[i] for i in tr])
        write_libsvm(OUT / f"{name}.test.svm", x[te], [y[i] for i in te])

    pima = load("PimaIndiansDiabetes")
    x = pima[[c for c in pima.columns if c != "diabetes"]].to_numpy(dtype=float)
    y = [1 if c == "pos" else 0 for c in pima["diabetes"]]
    split_70_30("diabetes", x, y)

    sonar = load("Sonar")
    x = sonar[[c for c in sonar.columns if c != "Class"]].to_numpy(dtype=float)
    y = [1 if c == "M" else 0 for c in sonar["Class"]]
    split_70_30("sonar", x, y)


if __name__ == "__main__":
    main()
