"""Tensor-train compression for token embedding tables.

Converts each row of an embedding table into a short chain of small cores,
reconstructs rows on demand, supports incremental vocabulary updates on a
persistent store, and quantifies compression, flops, and estimated energy
against a whole-table low-rank baseline.
"""

from . import errors
from .energy import EnergyConfig, EnergyReport, compare
from .formats import read_emb1, write_emb1
from .metrics import (
    compression_ratios,
    delta_ln_ppl,
    ln_perplexity,
    perplexity,
    tradeoff_score,
)
from .shapes import ShapePlan, enumerate_factorizations, optimal_shapes, plan, storage_for
from .store import CompressedVocab, build, load
from .svd_baseline import LowRankTable, compress_table, lookup_row
from .tensor import Tensor, contract, matricize, tensorize, vectorize
from .ttsvd import (
    CompressSpec,
    TTVector,
    compression_ratio,
    param_count,
    reconstruct,
    reconstruction_flops,
    structural_max_ranks,
    truncated_svd,
    tt_svd,
)

__version__ = "0.1.0"

__all__ = [
    "CompressSpec",
    "CompressedVocab",
    "EnergyConfig",
    "EnergyReport",
    "LowRankTable",
    "ShapePlan",
    "TTVector",
    "Tensor",
    "build",
    "compare",
    "compress_table",
    "compression_ratio",
    "compression_ratios",
    "contract",
    "delta_ln_ppl",
    "enumerate_factorizations",
    "errors",
    "ln_perplexity",
    "load",
    "lookup_row",
    "matricize",
    "optimal_shapes",
    "param_count",
    "perplexity",
    "plan",
    "read_emb1",
    "reconstruct",
    "reconstruction_flops",
    "storage_for",
    "structural_max_ranks",
    "tensorize",
    "tradeoff_score",
    "truncated_svd",
    "tt_svd",
    "vectorize",
    "write_emb1",
]
