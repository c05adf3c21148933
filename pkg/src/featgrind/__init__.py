"""Quantized feature stores for graph learning workloads.

Log-domain scalar quantization and k-means vector quantization of node
feature matrices, aggregation-factor analysis that turns output error
budgets into bit widths, graph sparsifiers, and a mini-batch loading
simulator, all behind one `featgrind` CLI with stable binary formats.
"""

from .errors import DataError, FormatError
from .graphstore import (CsrGraph, FeatureMatrix, generate_features,
                         generate_graph, load_features, load_graph,
                         save_features, save_graph, sparsify)
from .sq import (SqCodec, SqParams, dequantize_sq, fit_sq, load_sq,
                 quantize_sq, save_sq, sq_compression_ratio)
from .vq import (VqCodec, VqCrReport, VqParams, decode_vq, encode_vq, fit_vq,
                 load_vq, save_vq, vq_compression_ratio)
from .factors import (CrSuggestion, FactorReport, aggregation_operator,
                      factors_exact, factors_mc, suggest_cr)
from .pipeline import (BatchPlan, CacheConfig, CostModel, FullCodec,
                       MiniBatchSample, SamplerConfig, SimReport, SqShape,
                       VqShape, compare_reports, render_csv, render_text,
                       sample_batches, simulate_epoch, worker_scaling)

__version__ = "0.1.0"

__all__ = [
    "DataError", "FormatError",
    "CsrGraph", "FeatureMatrix", "generate_graph", "generate_features",
    "sparsify", "save_features", "load_features", "save_graph", "load_graph",
    "SqParams", "SqCodec", "fit_sq", "quantize_sq", "dequantize_sq",
    "sq_compression_ratio", "save_sq", "load_sq",
    "VqParams", "VqCodec", "VqCrReport", "fit_vq", "encode_vq", "decode_vq",
    "vq_compression_ratio", "save_vq", "load_vq",
    "FactorReport", "CrSuggestion", "aggregation_operator", "factors_exact",
    "factors_mc", "suggest_cr",
    "SamplerConfig", "CacheConfig", "CostModel", "FullCodec", "SqShape",
    "VqShape", "MiniBatchSample", "BatchPlan", "SimReport", "sample_batches",
    "simulate_epoch", "compare_reports", "worker_scaling", "render_text",
    "render_csv",
    "__version__",
]
