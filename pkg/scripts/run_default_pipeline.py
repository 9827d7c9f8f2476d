#!/usr/bin/env python3
"""Run every verification suite at base resolution on the default instances.

Builds the five stock spaces (two cyclic-flavoured groups, the symmetric and
quaternion class algebras, a truncated Chebyshev table and a Bessel-Kingman
quadrature table), runs all eight suites on each, and writes one report
bundle per instance under --out.  Prints a PASS/FAIL line per suite and the
total wall time; exits nonzero if anything failed.
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from hyperpot import SUITE_NAMES, run_experiment

# The Bessel-Kingman table is a quadrature surrogate for a continuum
# translation: rows at the window edge lose the mass pushed past the window,
# so the exact structure-identity suite only applies to the tabulated
# instances.  Everything else runs everywhere.
INSTANCES = (
    ("z64", {"kind": "cyclic", "n": 64}, SUITE_NAMES),
    ("s3", {"kind": "conjugacy", "group": "s3"}, SUITE_NAMES),
    ("q8", {"kind": "conjugacy", "group": "q8"}, SUITE_NAMES),
    ("cheb64", {"kind": "chebyshev", "M": 64}, SUITE_NAMES),
    (
        "bessel64",
        {"kind": "bessel", "alpha": 0.5, "grid_size": 64, "step": 0.5},
        tuple(s for s in SUITE_NAMES if s != "axioms"),
    ),
)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("pipeline_out"))
    ap.add_argument("--max-workers", type=int, default=1)
    args = ap.parse_args(argv)

    t0 = time.perf_counter()
    all_ok = True
    for name, instance, suites in INSTANCES:
        config = {
            "instance": instance,
            "kernel": {"family": "power", "alpha": 0.25},
            "p": 2.0,
            "suites": list(suites),
            "resolutions": [],
            "seed": 0,
        }
        report = run_experiment(config, args.out / name, max_workers=args.max_workers)
        for suite in suites:
            ok = bool(report["suites"][suite]["passed"])
            all_ok &= ok
            print(f"{name:9s} {suite:10s} {'PASS' if ok else 'FAIL'}")
    print(f"total {time.perf_counter() - t0:.1f}s")
    return 0 if all_ok else 1


if __name__ == "__main__":
    sys.exit(main())
