"""Latency and flop-count harness for compression and reconstruction.

Timings use the monotonic performance counter with warm-up rounds excluded
and are reported as mean, standard deviation, and median-of-means; only the
flop and parameter counts are asserted anywhere, wall-clock numbers are
environment-dependent context.  Published single-board and workstation
reference latencies can be printed beside host numbers but are labeled
non-comparable.
"""

from __future__ import annotations

import statistics
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .store import CompressedVocab, build
from .ttsvd import CompressSpec, reconstruct, reconstruction_flops, tt_svd

CSV_HEADER = "op,shape,ranks,eps,d,V,l,reps,mean,std,flops_per_token"

DEFAULT_REPS = 30
_WARMUP = 3

# Published reference latencies (ms/token) for single-token compression and
# reconstruction on a workstation CPU and a Raspberry Pi 5 class device, at
# a mild and at the maximum compression setting.  Context only: numbers
# from other hardware are not comparable to this host.
REFERENCE_MS_PER_TOKEN = {
    ("workstation", 768): {"compress": (0.627, 1.429), "reconstruct": (0.117, 0.238)},
    ("workstation", 1024): {"compress": (0.452, 1.512), "reconstruct": (0.114, 0.261)},
    ("raspberry-pi-5", 768): {"compress": (0.760, 1.948), "reconstruct": (0.330, 0.468)},
    ("raspberry-pi-5", 1024): {"compress": (0.612, 2.148), "reconstruct": (0.364, 0.614)},
}

# Published whole-text inference latencies on the same single-board device,
# s/text at 50 input tokens, as (mean, std) for the uncompressed model, a
# mild compression setting, and the maximum-compression setting.
REFERENCE_S_PER_TEXT = {
    "distilgpt2": ((0.19, 0.02), (0.36, 0.19), (0.19, 0.03)),
    "gpt2": ((0.50, 0.19), (0.50, 0.16), (0.71, 0.38)),
    "gpt2-medium": ((1.23, 0.12), (1.26, 0.22), (1.55, 0.36)),
    "gpt2-large": ((3.01, 0.47), (3.01, 0.29), (3.52, 0.44)),
    "cerebras-gpt-111m": ((0.47, 0.21), (0.48, 0.23), (0.72, 0.42)),
    "cerebras-gpt-256m": ((0.71, 0.02), (1.01, 0.29), (0.95, 0.27)),
    "cerebras-gpt-590m": ((1.81, 0.25), (1.89, 0.28), (1.91, 0.24)),
}


@dataclass(frozen=True)
class BenchResult:
    """One measured operation plus the workload fingerprint."""

    op: str
    shape: tuple[int, ...]
    ranks: tuple[int, ...] | str
    eps: float
    d: int
    V: int
    l: int
    reps: int
    mean: float
    std: float
    median_of_means: float
    flops_per_token: float
    unit: str

    def csv_row(self) -> str:
        shape = "x".join(map(str, self.shape))
        ranks = self.ranks if isinstance(self.ranks, str) else "x".join(map(str, self.ranks))
        return ",".join(
            str(v)
            for v in (
                self.op, shape, ranks, self.eps, self.d, self.V, self.l,
                self.reps, f"{self.mean:.6g}", f"{self.std:.6g}",
                f"{self.flops_per_token:.6g}",
            )
        )


def _summarize(samples: list[float], groups: int = 5) -> tuple[float, float, float]:
    mean = statistics.fmean(samples)
    std = statistics.stdev(samples) if len(samples) > 1 else 0.0
    g = min(groups, len(samples))
    chunks = [samples[i::g] for i in range(g)]
    mom = statistics.median(statistics.fmean(c) for c in chunks)
    return mean, std, mom


def _common_ranks(vocab: CompressedVocab, ids) -> tuple[int, ...] | str:
    ranks = {vocab.entries[i].ranks for i in ids}
    return next(iter(ranks)) if len(ranks) == 1 else "mixed"


def bench_compress(
    table: np.ndarray, spec: CompressSpec, reps: int = DEFAULT_REPS, workers: int = 1
) -> BenchResult:
    """Time per-row compression of a table, ms/token.

    workers > 1 measures thread-parallel throughput; rows are independent,
    and equal inputs produce identical cores at any worker count.
    """
    table = np.asarray(table, dtype=np.float64)
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    tokens = table.shape[0]

    def run_once() -> float:
        start = time.perf_counter()
        if workers == 1:
            out = [tt_svd(row, spec) for row in table]
        else:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                out = list(pool.map(lambda row: tt_svd(row, spec), table))
        elapsed = time.perf_counter() - start
        run_once.last = out
        return elapsed / tokens * 1e3

    for _ in range(_WARMUP):
        run_once()
    samples = [run_once() for _ in range(reps)]
    mean, std, mom = _summarize(samples)
    flops = statistics.fmean(reconstruction_flops(tt) for tt in run_once.last)
    rank_sets = {tt.ranks for tt in run_once.last}
    return BenchResult(
        op="compress", shape=spec.shape,
        ranks=next(iter(rank_sets)) if len(rank_sets) == 1 else "mixed",
        eps=spec.epsilon, d=spec.d, V=tokens, l=tokens, reps=reps,
        mean=mean, std=std, median_of_means=mom, flops_per_token=flops,
        unit="ms/token",
    )


def bench_reconstruct(vocab: CompressedVocab, ids, reps: int = DEFAULT_REPS) -> BenchResult:
    """Time reconstruction of the given token ids, ms/token."""
    ids = list(ids)
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    cores = [vocab.entries[i] for i in ids]

    def run_once() -> float:
        start = time.perf_counter()
        for tt in cores:
            reconstruct(tt)
        return (time.perf_counter() - start) / len(cores) * 1e3

    for _ in range(_WARMUP):
        run_once()
    samples = [run_once() for _ in range(reps)]
    mean, std, mom = _summarize(samples)
    flops = statistics.fmean(reconstruction_flops(tt) for tt in cores)
    return BenchResult(
        op="reconstruct", shape=vocab.shape, ranks=_common_ranks(vocab, ids),
        eps=vocab.epsilon, d=vocab.d, V=len(vocab), l=len(ids), reps=reps,
        mean=mean, std=std, median_of_means=mom, flops_per_token=flops,
        unit="ms/token",
    )


def bench_lookup_text(
    vocab: CompressedVocab, l: int, reps: int = DEFAULT_REPS, seed: int = 0
) -> BenchResult:
    """Time a whole l-token batch lookup, s/text, with seeded token choice."""
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    rng = np.random.default_rng(seed)
    pool = sorted(vocab.entries)
    ids = [pool[j] for j in rng.integers(0, len(pool), size=l)]

    def run_once() -> float:
        start = time.perf_counter()
        vocab.lookup_batch(ids)
        return time.perf_counter() - start

    for _ in range(_WARMUP):
        run_once()
    samples = [run_once() for _ in range(reps)]
    mean, std, mom = _summarize(samples)
    flops = statistics.fmean(reconstruction_flops(vocab.entries[i]) for i in ids)
    return BenchResult(
        op="lookup-text", shape=vocab.shape, ranks=_common_ranks(vocab, ids),
        eps=vocab.epsilon, d=vocab.d, V=len(vocab), l=l, reps=reps,
        mean=mean, std=std, median_of_means=mom, flops_per_token=flops,
        unit="s/text",
    )


SUITE_OPS = ("compress", "reconstruct", "lookup-text")


def default_suite(
    V: int = 128, d: int = 64, eps: float = 0.1, l: int = 50,
    reps: int = DEFAULT_REPS, seed: int = 0, ops=SUITE_OPS,
) -> list[BenchResult]:
    """The standard measurement run on a seeded synthetic table."""
    from .shapes import plan
    from .ttsvd import structural_max_ranks

    rng = np.random.default_rng(seed)
    table = rng.standard_normal((V, d))
    shape = plan(d, "max").shape
    spec = CompressSpec(shape=shape, max_ranks=structural_max_ranks(shape), epsilon=eps)
    vocab = build(table, spec)
    ids = sorted(vocab.entries)
    results = []
    if "compress" in ops:
        results.append(bench_compress(table, spec, reps=reps))
    if "reconstruct" in ops:
        results.append(bench_reconstruct(vocab, ids, reps=reps))
    if "lookup-text" in ops:
        results.append(bench_lookup_text(vocab, l, reps=reps, seed=seed))
    return results


def matched_budget_report(table: np.ndarray, spec: CompressSpec) -> list[str]:
    """Per-row reconstruction error of both compression routes at equal budgets.

    The whole-table factorization rank k is chosen so k (V + d) best matches
    the tensor-train total.  Both errors are reported side by side; neither
    is asserted smaller, raw reconstruction error is not what separates the
    two approaches.
    """
    from .svd_baseline import compress_table, lookup_row

    table = np.asarray(table, dtype=np.float64)
    v, d = table.shape
    vocab = build(table, spec)
    tt_params = vocab.total_params
    tt_err = statistics.fmean(
        float(np.linalg.norm(vocab.lookup(i) - table[i])) for i in range(v)
    )
    k = max(1, min(min(v, d), round(tt_params / (v + d))))
    low_rank = compress_table(table, k)
    svd_err = statistics.fmean(
        float(np.linalg.norm(lookup_row(low_rank, i) - table[i])) for i in range(v)
    )
    return [
        f"tt_params={tt_params}",
        f"tt_mean_row_error={tt_err:.6g}",
        f"svd_rank={k}",
        f"svd_params={low_rank.param_count}",
        f"svd_mean_row_error={svd_err:.6g}",
    ]


def reference_lines() -> list[str]:
    """Human-readable context block of the published reference latencies."""
    out = ["# published reference latencies, ms/token (other hardware, not comparable):"]
    for (device, dim), ops in REFERENCE_MS_PER_TOKEN.items():
        for op, (mild, maximum) in ops.items():
            out.append(
                f"#   {device} d={dim} {op}: {mild} (mild setting) / {maximum} (max compression)"
            )
    out.append("# published single-board whole-text latencies, s/text at l=50 (not comparable):")
    for model, cases in REFERENCE_S_PER_TEXT.items():
        cells = " / ".join(f"{m}+-{s}" for m, s in cases)
        out.append(f"#   {model}: {cells} (original / mild / max compression)")
    return out
