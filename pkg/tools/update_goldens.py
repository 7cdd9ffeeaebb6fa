#!/usr/bin/env python3
"""Refresh the committed golden snapshots of generated code for the demo
project. Run after intentional codegen changes; review the diff."""

from __future__ import annotations

import os
import shutil
import sys

HERE = os.path.dirname(os.path.abspath(__file__))
REPO = os.path.dirname(HERE)
sys.path.insert(0, os.path.join(REPO, "src"))

from mlcforge.analysis import analyze_unit  # noqa: E402
from mlcforge.codegen import generate_all, write_fileset  # noqa: E402
from mlcforge.frontend import load_project  # noqa: E402

DEMO = os.path.join(REPO, "demo", "mnist_calculator")
GOLDEN = os.path.join(REPO, "tests", "golden", "mnist_calculator")


def main() -> None:
    unit, diags = load_project(DEMO)
    assert unit is not None, [d.render() for d in diags]
    analysis = analyze_unit(unit)
    assert analysis.ok, [d.render() for d in analysis.diagnostics]
    fileset = generate_all(analysis)
    if os.path.isdir(GOLDEN):
        shutil.rmtree(GOLDEN)
    written = write_fileset(fileset, GOLDEN)
    for path in written:
        print(f"golden: {path}")


if __name__ == "__main__":
    main()
