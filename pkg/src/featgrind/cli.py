"""Command-line interface.

One binary, subcommands for every operation: graph/feature generation,
sparsification, both codecs, factor analysis, the loading simulator,
and report comparison.  Exit codes: 0 success, 1 usage errors, 2 data
errors (bad files, bad values, mismatched dimensions).  Diagnostics go
to stderr; outputs contain no timestamps, so a repeated invocation
writes byte-identical files.  Every JSON output embeds the resolved
configuration and its hash under "meta"; runs with binary outputs echo
the same configuration to stderr instead.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time

import numpy as np

from . import __version__
from .errors import DataError
from .graphstore import (FEATURE_KINDS, GRAPH_KINDS, SPARSIFY_METHODS,
                         generate_features, generate_graph, load_features,
                         load_graph, save_features, save_graph, sparsify)
from .sq import (DEFAULT_CLIP_TAIL_FRACTION, SqParams, dequantize_sq, fit_sq,
                 load_sq, quantize_sq, save_sq, sq_compression_ratio)
from .vq import (CODE_LAYOUTS, METRICS, VqParams, decode_vq, encode_vq,
                 fit_vq, load_vq, save_vq, vq_compression_ratio)
from .factors import (DEFAULT_EXACT_NODE_CAP, factors_exact, factors_mc,
                      suggest_cr)
from .pipeline import (CacheConfig, CostModel, FullCodec, SamplerConfig,
                       SimReport, SqShape, VqShape, compare_reports,
                       render_csv, render_text, sample_batches,
                       simulate_epoch, worker_scaling)

log = logging.getLogger("featgrind")

FORMAT_VERSIONS = {"fmat": 1, "csrg": 1, "sqf": 1, "vqf": 1}


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; this tool reserves 2 for data
    errors, so remap usage problems to exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    return [int(tok) for tok in text.split(",") if tok.strip() != ""]


def _config_of(args: argparse.Namespace) -> dict:
    skip = {"func"}
    cfg = {k: v for k, v in sorted(vars(args).items()) if k not in skip}
    return cfg


def _meta(args: argparse.Namespace) -> dict:
    cfg = _config_of(args)
    blob = json.dumps(cfg, sort_keys=True, default=str)
    return {
        "tool": "featgrind",
        "version": __version__,
        "format_versions": FORMAT_VERSIONS,
        "config": cfg,
        "config_hash": hashlib.sha256(blob.encode()).hexdigest()[:16],
    }


def _write_json(payload: dict, path: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _echo_config(args: argparse.Namespace) -> None:
    meta = _meta(args)
    log.info("config %s hash=%s",
             json.dumps(meta["config"], sort_keys=True, default=str),
             meta["config_hash"])


def _cmd_gen_graph(args) -> int:
    g = generate_graph(args.kind, args.n, seed=args.seed, p=args.p, m=args.m,
                       self_loops=args.self_loops)
    save_graph(g, args.out)
    log.info("wrote %s: n=%d nnz=%d undirected_edges=%d self_loops=%s",
             args.out, g.n, g.nnz, g.num_undirected_edges(), g.has_self_loops)
    return 0


def _cmd_gen_features(args) -> int:
    f = generate_features(args.n, args.d, args.kind, seed=args.seed,
                          shared_weight=args.shared_weight, dtype=args.dtype)
    save_features(f, args.out)
    log.info("wrote %s: n=%d d=%d elem_bits=%d", args.out, f.n, f.d, f.elem_bits)
    return 0


def _cmd_sparsify(args) -> int:
    g = load_graph(args.graph)
    out = sparsify(g, args.method, args.keep, seed=args.seed)
    save_graph(out, args.out)
    log.info("wrote %s: kept %d of %d undirected edges", args.out,
             out.num_undirected_edges(), g.num_undirected_edges())
    return 0


def _sq_params_from_args(args, f) -> SqParams:
    if getattr(args, "params", None):
        with open(args.params) as fh:
            payload = json.load(fh)
        p = payload.get("params", payload)
        try:
            return SqParams(int(p["k"]), float(p["e_min"]), float(p["e_max"]),
                            float(p["clip_tail_fraction"]))
        except KeyError as e:
            raise DataError(f"params file missing key {e.args[0]!r}") from e
    if args.k is None:
        raise DataError("either --k or --params is required")
    return fit_sq(f, args.k, args.clip)


def _cmd_sq_fit(args) -> int:
    f = load_features(args.features)
    p = fit_sq(f, args.k, args.clip)
    payload = {
        "meta": _meta(args),
        "params": {"k": p.k, "e_min": p.e_min, "e_max": p.e_max,
                   "clip_tail_fraction": p.clip_tail_fraction},
    }
    _write_json(payload, args.out)
    return 0


def _cmd_sq_encode(args) -> int:
    f = load_features(args.features)
    p = _sq_params_from_args(args, f)
    codec = quantize_sq(f, p)
    save_sq(codec, args.out)
    payload_cr, stored_cr = sq_compression_ratio(codec)
    log.info("wrote %s: k=%d e_min=%.6g e_max=%.6g cr=%.4g (with header %.4g)",
             args.out, p.k, p.e_min, p.e_max, payload_cr, stored_cr)
    return 0


def _cmd_sq_decode(args) -> int:
    codec = load_sq(args.codec)
    rows = np.asarray(args.rows, dtype=np.int64) if args.rows is not None else None
    save_features(dequantize_sq(codec, rows), args.out)
    log.info("wrote %s", args.out)
    return 0


def _vq_params_from_args(args) -> VqParams:
    if args.width is None or args.length is None:
        raise DataError("--width and --length are required to fit")
    return VqParams(width=args.width, length=args.length, metric=args.metric,
                    code_layout=args.layout,
                    fit_sample_fraction=args.sample_fraction,
                    kmeans_max_iters=args.max_iters, kmeans_tol=args.tol,
                    restarts=args.restarts, seed=args.seed)


def _cmd_vq_fit(args) -> int:
    f = load_features(args.features)
    codec = fit_vq(f, _vq_params_from_args(args))
    save_vq(codec, args.out)
    cr = vq_compression_ratio(codec)
    log.info("wrote %s: parts=%d entries=%s cr=%.4g (theoretical %.4g)",
             args.out, codec.num_parts, list(codec.part_lengths()),
             cr.realized, cr.theoretical)
    return 0


def _cmd_vq_encode(args) -> int:
    f = load_features(args.features)
    if args.codebook is not None:
        codec = load_vq(args.codebook)
        if codec.codes is not None:
            raise DataError(f"{args.codebook} already contains codes")
    else:
        if args.width is None or args.length is None:
            raise DataError("either --codebook or --width/--length is required")
        codec = fit_vq(f, _vq_params_from_args(args))
    codec = encode_vq(f, codec)
    save_vq(codec, args.out)
    cr = vq_compression_ratio(codec)
    log.info("wrote %s: n=%d parts=%d bits_per_code=%d cr=%.4g",
             args.out, codec.n, codec.num_parts, cr.bits_per_code, cr.realized)
    return 0


def _cmd_vq_decode(args) -> int:
    codec = load_vq(args.codec)
    rows = np.asarray(args.rows, dtype=np.int64) if args.rows is not None else None
    save_features(decode_vq(codec, rows), args.out)
    log.info("wrote %s", args.out)
    return 0


def _cmd_factors(args) -> int:
    g = load_graph(args.graph)
    f = load_features(args.features) if args.features else None
    if args.estimator == "exact":
        report = factors_exact(g, f, args.layers, node_cap=args.node_cap)
    else:
        report = factors_mc(g, f, args.layers, num_samples=args.samples,
                            seed=args.seed)
    payload = {"meta": _meta(args), **report.to_dict(args.per_node)}
    if args.suggest_epsilon is not None:
        s = suggest_cr(report, args.suggest_epsilon, args.elem_bits)
        payload["suggestion"] = {
            "epsilon": s.epsilon, "c_hat_L": s.c_hat_L,
            "delta_budget": s.delta_budget, "k": s.k, "cr": s.cr,
        }
    _write_json(payload, args.out)
    return 0


def _parse_codec_spec(text: str, d: int, elem_bits: int):
    s = text.strip().lower()
    if s == "full":
        return FullCodec(d, elem_bits)
    if s.startswith("sq:"):
        try:
            return SqShape(d, int(s[3:]), elem_bits)
        except ValueError as e:
            raise DataError(f"bad codec spec {text!r}: expected sq:K") from e
    if s.startswith("vq:"):
        bits = s[3:].split("-")
        if len(bits) not in (2, 3):
            raise DataError(f"bad codec spec {text!r}: expected vq:WIDTH-LENGTH[-LAYOUT]")
        layout = bits[2] if len(bits) == 3 else "packed"
        if layout not in CODE_LAYOUTS:
            raise DataError(f"bad codec layout {layout!r}")
        try:
            return VqShape(d, int(bits[0]), int(bits[1]), layout, elem_bits)
        except ValueError as e:
            raise DataError(f"bad codec spec {text!r}") from e
    raise DataError(f"unknown codec {text!r}; use full, sq:K, or vq:W-L[-LAYOUT]")


def _cmd_simulate(args) -> int:
    g = load_graph(args.graph)
    if args.features:
        f = load_features(args.features)
        if f.n != g.n:
            raise DataError(f"features have {f.n} rows but graph has {g.n} nodes")
        d, elem_bits = f.d, f.elem_bits
    elif args.d is not None:
        d, elem_bits = args.d, 32
    else:
        raise DataError("either --features or --d is required")
    codec = _parse_codec_spec(args.codec, d, elem_bits)
    if not 0.0 < args.train_frac <= 1.0:
        raise DataError("--train-frac must be in (0, 1]")
    count = max(1, min(g.n, math.ceil(args.train_frac * g.n - 1e-9)))
    train = np.random.default_rng(args.seed).permutation(g.n)[:count]
    t0 = time.perf_counter()
    plan = sample_batches(g, train, SamplerConfig(tuple(args.fanouts),
                                                  args.batch_size, args.seed))
    t1 = time.perf_counter()
    if args.cost:
        with open(args.cost) as fh:
            cost = CostModel.from_dict(json.load(fh))
    else:
        cost = CostModel.calibrate(plan, FullCodec(d, elem_bits),
                                   load_fraction=args.load_fraction)
    report = simulate_epoch(plan, codec, CacheConfig(args.cache_bytes), cost)
    t2 = time.perf_counter()
    if args.measure:
        print(f"measured: sample_batches {t1 - t0:.3f}s simulate {t2 - t1:.3f}s",
              file=sys.stderr)
    payload = {"meta": _meta(args), **report.to_dict(),
               "cost_model": cost.to_dict(),
               "worker_scaling": {str(w): t for w, t in
                                  worker_scaling(report, [1, 2, 4, 8]).items()}}
    _write_json(payload, args.out)
    return 0


def _cmd_report(args) -> int:
    def read(path: str) -> SimReport:
        with open(path) as fh:
            return SimReport.from_dict(json.load(fh))

    baseline = read(args.baseline)
    variants = [read(p) for p in args.variant]
    reports = compare_reports(baseline, variants)
    if args.format == "text":
        text = render_text(reports) + "\n"
    elif args.format == "csv":
        text = render_csv(reports) + "\n"
    else:
        text = json.dumps({"meta": _meta(args),
                           "reports": [r.to_dict() for r in reports]},
                          indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    if args.plot:
        _plot_reports(reports, args.plot)
    return 0


def _plot_reports(reports, path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    labels = [r.label for r in reports]
    stages = ["sample_s", "load_s", "dequant_s", "compute_s"]
    fig, ax = plt.subplots(figsize=(1.5 + len(labels), 4))
    bottom = np.zeros(len(reports))
    for stage in stages:
        vals = np.array([getattr(r, stage) for r in reports])
        ax.bar(labels, vals, bottom=bottom, label=stage[:-2])
        bottom += vals
    ax.set_ylabel("epoch seconds")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def _build_parser() -> _Parser:
    parser = _Parser(prog="featgrind", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"featgrind {__version__} "
                                f"(formats {FORMAT_VERSIONS})")
    parser.add_argument("--seed", type=int, default=0,
                        help="RNG seed for seeded subcommands")
    parser.add_argument("--threads", type=int, default=1,
                        help="reserved; all operations are single-threaded")
    parser.add_argument("--log-level", default="warning",
                        choices=["debug", "info", "warning", "error"])
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("gen-graph", help="generate a synthetic graph")
    p.add_argument("--kind", required=True, choices=GRAPH_KINDS)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=None,
                   help="edge probability (erdos_renyi)")
    p.add_argument("--m", type=int, default=None,
                   help="edges per new node (preferential_attachment)")
    p.add_argument("--self-loops", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_graph)

    p = sub.add_parser("gen-features", help="generate a synthetic feature matrix")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--kind", default="normal", choices=FEATURE_KINDS)
    p.add_argument("--shared-weight", type=float, default=0.9,
                   help="shared-direction weight for kind=correlated")
    p.add_argument("--dtype", default="float32", choices=["float32", "float64"])
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen_features)

    p = sub.add_parser("sparsify", help="drop edges by a sparsifier policy")
    p.add_argument("--graph", required=True)
    p.add_argument("--method", required=True, choices=SPARSIFY_METHODS)
    p.add_argument("--keep", type=float, required=True,
                   help="fraction of undirected edges to keep, in (0, 1]")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sparsify)

    p = sub.add_parser("sq", help="log-domain scalar codec")
    sq_sub = p.add_subparsers(dest="sq_command", required=True, metavar="action")

    q = sq_sub.add_parser("fit", help="fit exponent range, write params JSON")
    q.add_argument("--features", required=True)
    q.add_argument("--k", type=int, required=True)
    q.add_argument("--clip", type=float, default=DEFAULT_CLIP_TAIL_FRACTION)
    q.add_argument("--out", default=None, help="params JSON (default stdout)")
    q.set_defaults(func=_cmd_sq_fit)

    q = sq_sub.add_parser("encode", help="fit (or load params) and quantize")
    q.add_argument("--features", required=True)
    q.add_argument("--k", type=int, default=None)
    q.add_argument("--clip", type=float, default=DEFAULT_CLIP_TAIL_FRACTION)
    q.add_argument("--params", default=None, help="params JSON from sq fit")
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_sq_encode)

    q = sq_sub.add_parser("decode", help="dequantize all rows or a subset")
    q.add_argument("--codec", required=True)
    q.add_argument("--rows", type=_int_list, default=None,
                   help="comma-separated row ids (default all)")
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_sq_decode)

    p = sub.add_parser("vq", help="k-means vector codec")
    vq_sub = p.add_subparsers(dest="vq_command", required=True, metavar="action")

    def vq_fit_flags(q):
        q.add_argument("--width", type=int, required=False, default=None)
        q.add_argument("--length", type=int, required=False, default=None)
        q.add_argument("--metric", default="cosine", choices=METRICS)
        q.add_argument("--layout", default="packed", choices=CODE_LAYOUTS)
        q.add_argument("--sample-fraction", type=float, default=None,
                       help="row fraction for fitting (default min(1, 1e6/n))")
        q.add_argument("--max-iters", type=int, default=50)
        q.add_argument("--tol", type=float, default=1e-4)
        q.add_argument("--restarts", type=int, default=4)

    q = vq_sub.add_parser("fit", help="fit codebooks only")
    q.add_argument("--features", required=True)
    vq_fit_flags(q)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_vq_fit, codebook=None)

    q = vq_sub.add_parser("encode", help="encode rows (fits first unless --codebook)")
    q.add_argument("--features", required=True)
    q.add_argument("--codebook", default=None, help="codebooks-only file from vq fit")
    vq_fit_flags(q)
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_vq_encode)

    q = vq_sub.add_parser("decode", help="reconstruct all rows or a subset")
    q.add_argument("--codec", required=True)
    q.add_argument("--rows", type=_int_list, default=None,
                   help="comma-separated row ids (default all)")
    q.add_argument("--out", required=True)
    q.set_defaults(func=_cmd_vq_decode)

    p = sub.add_parser("factors", help="aggregation factor analysis")
    p.add_argument("--graph", required=True)
    p.add_argument("--features", default=None,
                   help="FMAT1 features (default: iid feature model)")
    p.add_argument("--layers", type=int, required=True)
    p.add_argument("--estimator", default="exact", choices=["exact", "mc"])
    p.add_argument("--samples", type=int, default=100_000,
                   help="probe count for the mc estimator")
    p.add_argument("--node-cap", type=int, default=DEFAULT_EXACT_NODE_CAP,
                   help="refuse exact estimation above this node count")
    p.add_argument("--per-node", action="store_true",
                   help="include per-node factor arrays")
    p.add_argument("--suggest-epsilon", type=float, default=None,
                   help="also emit a bit-width suggestion for this error budget")
    p.add_argument("--elem-bits", type=int, default=32, choices=[32, 64])
    p.add_argument("--out", default=None, help="report JSON (default stdout)")
    p.set_defaults(func=_cmd_factors)

    p = sub.add_parser("simulate", help="price an epoch of mini-batch loading")
    p.add_argument("--graph", required=True)
    p.add_argument("--features", default=None,
                   help="FMAT1 file fixing d and elem_bits")
    p.add_argument("--d", type=int, default=None,
                   help="feature dim if --features is not given")
    p.add_argument("--codec", required=True,
                   help="full | sq:K | vq:WIDTH-LENGTH[-LAYOUT]")
    p.add_argument("--fanouts", type=_int_list, required=True,
                   help="comma-separated, e.g. 5,10,15")
    p.add_argument("--batch-size", type=int, required=True)
    p.add_argument("--train-frac", type=float, default=1.0,
                   help="fraction of nodes used as seeds")
    p.add_argument("--cache-bytes", type=int, default=0)
    p.add_argument("--cost", default=None, help="cost model JSON")
    p.add_argument("--load-fraction", type=float, default=0.85,
                   help="calibrated full-precision load fraction when --cost is absent")
    p.add_argument("--measure", action="store_true",
                   help="print wall-clock timings to stderr")
    p.add_argument("--out", default=None, help="report JSON (default stdout)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("report", help="compare simulator reports")
    p.add_argument("--baseline", required=True)
    p.add_argument("--variant", action="append", default=[],
                   help="repeatable variant report JSON")
    p.add_argument("--format", default="text", choices=["text", "csv", "json"])
    p.add_argument("--out", default=None)
    p.add_argument("--plot", default=None, help="write a stacked stage-time PNG")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(stream=sys.stderr,
                        level=getattr(logging, args.log_level.upper()),
                        format="%(name)s %(levelname)s %(message)s")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    _echo_config(args)
    try:
        return args.func(args)
    except (DataError, OSError) as e:
        print(f"featgrind: error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
