#!/usr/bin/env python3
"""Perplexity deltas and trade-off score from two log-probability streams.

Each input file holds one natural-log probability per line (the output of
whatever model produced them; this toolkit never runs a model).  Prints the
key=value report followed by a CSV header and row.

    python3 scripts/ppl_metrics.py before.txt after.txt --orig 38597376 --cmpr 19298688
"""

import argparse

from ttemb.metrics import METRICS_CSV_HEADER, metrics_report, read_logprobs


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("before", help="log-prob stream of the original model")
    ap.add_argument("after", help="log-prob stream of the compressed model")
    ap.add_argument("--orig", type=int, required=True, help="original parameter count")
    ap.add_argument("--cmpr", type=int, required=True, help="compressed parameter count")
    args = ap.parse_args()

    lines, row = metrics_report(
        read_logprobs(args.before), read_logprobs(args.after), args.orig, args.cmpr
    )
    for line in lines:
        print(line)
    print(METRICS_CSV_HEADER)
    print(row)


if __name__ == "__main__":
    main()
