#!/usr/bin/env python3
"""Regenerate the demo project's CSV datasets (committed in-repo).

- digits.csv: first 1000 rows of the sklearn 8x8 digits set, columns p0..p63
  plus label.
- samples.csv: ten held-out rows (from beyond the first 1000), the first
  occurrence of each digit 0..9, used by the calculator scenario.
- operators.csv: synthetic 8x8 glyphs for the four operator classes
  (+, -, x, /), seeded noise, 120 rows per class.
"""

from __future__ import annotations

import os

import numpy as np
from sklearn.datasets import load_digits

HERE = os.path.dirname(os.path.abspath(__file__))
DATA_DIR = os.path.join(HERE, "..", "demo", "mnist_calculator", "data")

HEADER = ",".join([f"p{i}" for i in range(64)] + ["label"])


def write_csv(path: str, rows: list[list[int]]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(HEADER + "\n")
        for row in rows:
            fh.write(",".join(str(int(v)) for v in row) + "\n")
    print(f"wrote {path} ({len(rows)} rows)")


def digits_rows() -> tuple[list[list[int]], list[list[int]]]:
    bunch = load_digits()
    data = bunch.data.astype(int)
    labels = bunch.target.astype(int)
    train = [list(data[i]) + [labels[i]] for i in range(1000)]
    samples = []
    for digit in range(10):
        for i in range(1000, len(labels)):
            if labels[i] == digit:
                samples.append(list(data[i]) + [digit])
                break
    return train, samples


def glyph(op: int) -> np.ndarray:
    img = np.zeros((8, 8), dtype=int)
    if op == 0:  # plus
        img[3:5, 1:7] = 14
        img[1:7, 3:5] = 14
    elif op == 1:  # minus
        img[3:5, 1:7] = 14
    elif op == 2:  # times
        for i in range(1, 7):
            img[i, i] = 14
            img[i, 7 - i] = 14
    else:  # divide
        for i in range(1, 7):
            img[i, 7 - i] = 14
        img[1, 2] = 12
        img[6, 5] = 12
    return img


def operator_rows(rng: np.random.Generator, per_class: int = 120) -> list[list[int]]:
    rows = []
    for op in range(4):
        base = glyph(op)
        for _ in range(per_class):
            noisy = base + rng.integers(0, 4, size=(8, 8))
            jitter = rng.random((8, 8)) < 0.05
            noisy = np.where(jitter, rng.integers(0, 16, size=(8, 8)), noisy)
            noisy = np.clip(noisy, 0, 16)
            rows.append(list(noisy.flatten()) + [op])
    return rows


def main() -> None:
    os.makedirs(DATA_DIR, exist_ok=True)
    train, samples = digits_rows()
    write_csv(os.path.join(DATA_DIR, "digits.csv"), train)
    write_csv(os.path.join(DATA_DIR, "samples.csv"), samples)
    rng = np.random.default_rng(7)
    write_csv(os.path.join(DATA_DIR, "operators.csv"), operator_rows(rng))


if __name__ == "__main__":
    main()
