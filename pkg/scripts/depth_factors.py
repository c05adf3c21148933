"""
Sweep aggregation depth and report how the aggregation factor decays.

Usage:
    python3 scripts/depth_factors.py [--kind KIND] [--n N] [--layers L]
                                     [--features KIND] [--estimator {exact,mc}]
                                     [--epsilon EPS] [--seed SEED]

Prints one row per layer: mean edge-side factor, mean feature-side
factor, their ratio, and the bit width / compression ratio the ratio
justifies at the given error budget.
"""

from __future__ import annotations

import argparse
import sys
import time

from featgrind import (FactorReport, factors_exact, factors_mc,
                       generate_features, generate_graph, suggest_cr)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--kind", default="preferential_attachment",
                    help="graph generator kind")
    ap.add_argument("--n", type=int, default=5000)
    ap.add_argument("--m", type=int, default=8,
                    help="attachment edges per node (preferential kinds)")
    ap.add_argument("--p", type=float, default=None,
                    help="edge probability (erdos_renyi)")
    ap.add_argument("--layers", type=int, default=20)
    ap.add_argument("--features", default="correlated",
                    help="feature kind, or 'none' for the iid model")
    ap.add_argument("--d", type=int, default=16)
    ap.add_argument("--estimator", choices=("exact", "mc"), default="exact")
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--epsilon", type=float, default=0.1,
                    help="tolerated relative aggregate error")
    ap.add_argument("--seed", type=int, default=0)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    g = generate_graph(args.kind, args.n, seed=args.seed, p=args.p, m=args.m,
                       self_loops=True)
    f = None
    if args.features != "none":
        f = generate_features(args.n, args.d, kind=args.features,
                              seed=args.seed)

    start = time.perf_counter()
    if args.estimator == "exact":
        report = factors_exact(g, f, args.layers)
    else:
        report = factors_mc(g, f, args.layers, num_samples=args.samples,
                            seed=args.seed)
    elapsed = time.perf_counter() - start

    print(f"# {args.kind} n={g.n} edges={g.num_undirected_edges()} "
          f"features={args.features} estimator={report.estimator} "
          f"({elapsed:.2f}s)")
    print(f"{'layer':>5} {'mean_c_e':>10} {'mean_c_f':>10} {'c_hat':>10} "
          f"{'k':>3} {'cr':>7}")
    for layer in range(1, args.layers + 1):
        # suggest_cr reads the deepest layer, so re-slice per row
        s = suggest_cr(_at_depth(report, layer), args.epsilon)
        print(f"{layer:>5} {report.mean_c_e[layer]:>10.4f} "
              f"{report.mean_c_f[layer]:>10.4f} {report.c_hat[layer]:>10.4f} "
              f"{s.k:>3} {s.cr:>7.1f}")
    return 0


def _at_depth(report: FactorReport, layer: int) -> FactorReport:
    """View of a factor report truncated to the first `layer` layers."""
    return FactorReport(n=report.n, L=layer, estimator=report.estimator,
                        feature_model=report.feature_model,
                        c_e=report.c_e[:layer + 1],
                        c_f=report.c_f[:layer + 1],
                        num_samples=report.num_samples)


if __name__ == "__main__":
    sys.exit(main())
