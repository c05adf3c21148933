"""
Simulate one training epoch per feature codec and compare loading cost.

Usage:
    python3 scripts/loading_sim.py [--n N] [--d D] [--codecs SPEC ...]
                                   [--cache-bytes B] [--workers W ...]
                                   [--load-fraction F]

Codec specs use the CLI grammar: full, sq:K, vq:WIDTH-LENGTH[-LAYOUT].
The cost model is calibrated so the uncached full-precision epoch
spends the requested fraction of its time on feature transfer, then
every codec is simulated on the identical mini-batch workload.
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from featgrind import (CacheConfig, CostModel, FullCodec, SamplerConfig,
                       compare_reports, generate_graph, render_text,
                       sample_batches, simulate_epoch, worker_scaling)
from featgrind.cli import _parse_codec_spec


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(description=__doc__.strip().splitlines()[0])
    ap.add_argument("--kind", default="preferential_attachment")
    ap.add_argument("--n", type=int, default=20000)
    ap.add_argument("--m", type=int, default=8)
    ap.add_argument("--p", type=float, default=None)
    ap.add_argument("--d", type=int, default=128)
    ap.add_argument("--codecs", nargs="+",
                    default=["full", "sq:4", "sq:1", "vq:16-2048"])
    ap.add_argument("--fanouts", default="10,10")
    ap.add_argument("--batch-size", type=int, default=1024)
    ap.add_argument("--train-frac", type=float, default=0.1)
    ap.add_argument("--cache-bytes", type=int, default=0)
    ap.add_argument("--load-fraction", type=float, default=0.6,
                    help="transfer share of the full-precision epoch")
    ap.add_argument("--workers", type=int, nargs="+", default=[1, 2, 4, 8])
    ap.add_argument("--seed", type=int, default=0)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    g = generate_graph(args.kind, args.n, seed=args.seed, p=args.p, m=args.m,
                       self_loops=True)
    fanouts = tuple(int(x) for x in args.fanouts.split(","))
    train = np.arange(max(1, int(args.train_frac * g.n)))
    plan = sample_batches(g, train, SamplerConfig(fanouts, args.batch_size,
                                                  seed=args.seed))

    cost = CostModel.calibrate(plan, FullCodec(args.d),
                               load_fraction=args.load_fraction)
    cache = CacheConfig(args.cache_bytes)
    reports = [simulate_epoch(plan, _parse_codec_spec(spec, args.d, 32),
                              cache, cost)
               for spec in args.codecs]
    reports = compare_reports(reports[0], reports[1:])
    print(render_text(reports))

    print(f"\nepoch seconds by worker count {args.workers}:")
    for r in reports:
        scaled = worker_scaling(r, args.workers)
        row = " ".join(f"{scaled[w]:>10.4g}" for w in args.workers)
        print(f"{r.label:>16} {row}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
