"""
Compare sparsifier policies by the aggregation factor they leave behind.

Usage:
    python3 scripts/structure_factors.py [--n N] [--p P] [--keep F ...]
                                         [--seeds S] [--layers L]

For every sparsifier policy and keep fraction, sparsify a fresh graph
per seed, measure the deepest-layer factor ratio, and print the median.
Denser survivors mean more redundancy for aggregation to cancel, so
lower numbers tolerate coarser quantization.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from featgrind import (factors_exact, generate_features, generate_graph,
                       sparsify)
from featgrind.graphstore import SPARSIFY_METHODS


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--n", type=int, default=2000)
    ap.add_argument("--p", type=float, default=0.04,
                    help="edge probability of the base random graph")
    ap.add_argument("--keep", type=float, nargs="+",
                    default=[0.1, 0.3, 0.5, 0.9])
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--layers", type=int, default=2)
    ap.add_argument("--d", type=int, default=16)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    print(f"# erdos_renyi n={args.n} p={args.p} layers={args.layers} "
          f"median c_hat over {args.seeds} seeds")
    header = f"{'method':>12} " + " ".join(f"keep={f:<6}" for f in args.keep)
    print(header)
    for method in SPARSIFY_METHODS:
        medians = []
        for keep in args.keep:
            vals = []
            for seed in range(args.seeds):
                g = generate_graph("erdos_renyi", args.n, seed=seed, p=args.p,
                                   self_loops=True)
                f = generate_features(args.n, args.d, kind="correlated",
                                      seed=seed)
                sg = sparsify(g, method, keep_fraction=keep, seed=seed)
                vals.append(factors_exact(sg, f, args.layers).c_hat[-1])
            medians.append(float(np.median(vals)))
        print(f"{method:>12} " + " ".join(f"{v:<11.4f}" for v in medians))
    return 0


if __name__ == "__main__":
    sys.exit(main())
