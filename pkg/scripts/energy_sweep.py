#!/usr/bin/env python3
"""Sweep the per-token parameter budget and emit the energy comparison CSV.

Defaults model a GPT-2-small-class embedding layer; the sweep walks p from
d/16 up to d, pairing each point with the low-rank-table rank of equal
storage, so the two omega columns are directly comparable.

    python3 scripts/energy_sweep.py > energy_sweep.csv
"""

import argparse

from ttemb.energy import CSV_HEADER, EnergyConfig, compare


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--V", type=int, default=50257)
    ap.add_argument("--d", type=int, default=768)
    ap.add_argument("--l", type=int, default=50)
    ap.add_argument("--nu", type=float, default=1.0)
    ap.add_argument("--tau", type=float, default=0.2)
    ap.add_argument("--steps", type=int, default=16)
    args = ap.parse_args()

    print(CSV_HEADER)
    for step in range(1, args.steps + 1):
        p = max(1, args.d * step // args.steps)
        # equal-storage low-rank rank: k (V + d) = p V
        k = max(1, round(p * args.V / (args.V + args.d)))
        report = compare(
            EnergyConfig(V=args.V, d=args.d, l=args.l, nu=args.nu, tau=args.tau, p=p, k=k)
        )
        print(report.csv_row())


if __name__ == "__main__":
    main()
