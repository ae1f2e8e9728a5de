#!/usr/bin/env python3
"""Convert padded numpy arrays of a multivariate benchmark into RCTS-v1.

Input is either a directory holding x_train.npy, y_train.npy, x_test.npy and
y_test.npy, or a single .npz with the same four keys. x arrays have shape
(n_instances, T_padded, n_vars). Padding is NaN; with --trim-zeros, trailing
all-zero steps are stripped as well.

    python3 scripts/npz_to_rcts.py mts_archive/ArabicDigits --name ARAB \
        --out data/arab.rcts.jsonl
"""

import argparse
import json
import os
import sys

import numpy as np


def load_arrays(src):
    keys = ("x_train", "y_train", "x_test", "y_test")
    if os.path.isdir(src):
        return [np.load(os.path.join(src, k + ".npy"), allow_pickle=False) for k in keys]
    with np.load(src, allow_pickle=False) as z:
        return [z[k] for k in keys]


def label_text(y):
    if isinstance(y, (float, np.floating)) and float(y).is_integer():
        return str(int(y))
    return str(y)


def trim(x, trim_zeros):
    """Drops trailing padding rows from a (T, n_vars) array."""
    keep = len(x)
    while keep > 0:
        row = x[keep - 1]
        if np.all(np.isnan(row)) or (trim_zeros and np.all(row == 0.0)):
            keep -= 1
        else:
            break
    x = x[:keep]
    if np.isnan(x).any():
        raise ValueError("NaN inside a series (not trailing padding)")
    return x


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("src")
    ap.add_argument("--name", required=True)
    ap.add_argument("--out", required=True)
    ap.add_argument("--trim-zeros", action="store_true")
    args = ap.parse_args(argv)

    x_train, y_train, x_test, y_test = load_arrays(args.src)
    if x_train.ndim != 3 or x_test.ndim != 3 or x_train.shape[2] != x_test.shape[2]:
        sys.exit("x arrays must be (n, T, n_vars) with matching n_vars")
    labels = [label_text(y) for y in np.concatenate([y_train.ravel(), y_test.ravel()])]
    classes = sorted(set(labels[: len(y_train)]), key=lambda s: (len(s), s))
    unknown = set(labels) - set(classes)
    if unknown:
        sys.exit(f"test labels missing from train: {sorted(unknown)}")

    with open(args.out, "w") as f:
        header = {"format": "rcts-v1", "name": args.name, "n_vars": int(x_train.shape[2]), "classes": classes}
        f.write(json.dumps(header) + "\n")
        pos = 0
        for split, xs in (("train", x_train), ("test", x_test)):
            for i, x in enumerate(xs):
                series = trim(np.asarray(x, dtype=np.float64), args.trim_zeros)
                if len(series) == 0:
                    sys.exit(f"{split} instance {i} is empty after trimming")
                line = {
                    "id": f"{split}-{i:05d}",
                    "label": labels[pos],
                    "split": split,
                    "series": series.T.tolist(),
                }
                f.write(json.dumps(line) + "\n")
                pos += 1
    print(json.dumps({"path": args.out, "n_train": len(x_train), "n_test": len(x_test), "classes": len(classes)}))


if __name__ == "__main__":
    main()
