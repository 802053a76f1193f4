#!/usr/bin/env python3
"""Accuracy-versus-storage sweep on a synthetic Gaussian table.

For each accuracy target the script compresses every row, then reports the
achieved reduction fraction, the mean row error of the tensor-train route,
and the mean row error of an equal-budget whole-table factorization.

    python3 scripts/compression_sweep.py --V 256 --d 64
"""

import argparse

import numpy as np

from ttemb.bench import matched_budget_report
from ttemb.shapes import plan
from ttemb.store import build
from ttemb.ttsvd import CompressSpec, structural_max_ranks


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--V", type=int, default=128)
    ap.add_argument("--d", type=int, default=64)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--eps", type=float, nargs="*", default=[0.05, 0.1, 0.2, 0.3, 0.5])
    args = ap.parse_args()

    rng = np.random.default_rng(args.seed)
    table = rng.standard_normal((args.V, args.d))
    shape = plan(args.d, "max").shape
    caps = structural_max_ranks(shape)

    print("eps,eta_emb,total_params," "tt_mean_row_error,svd_rank,svd_mean_row_error")
    for eps in args.eps:
        spec = CompressSpec(shape=shape, max_ranks=caps, epsilon=eps)
        vocab = build(table, spec)
        report = dict(line.split("=") for line in matched_budget_report(table, spec))
        print(
            f"{eps},{vocab.eta_emb:.6g},{vocab.total_params},"
            f"{report['tt_mean_row_error']},{report['svd_rank']},{report['svd_mean_row_error']}"
        )


if __name__ == "__main__":
    main()
