"""Command line for the checkpoint exporter."""

from __future__ import annotations

import argparse
import sys

from .exporter import ModelNotFound, NotAnEmbedding, export


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(
        prog="ttemb-export",
        description="Extract an embedding table from a checkpoint into an EMB1 file",
    )
    ap.add_argument("--model", required=True,
                    help="checkpoint file, checkpoint directory, or hub model id")
    ap.add_argument("--table", choices=("token", "position"), default="token")
    ap.add_argument("--output", required=True, help="EMB1 output path")
    ap.add_argument("--tensor", help="explicit tensor name overriding the detection heuristics")
    args = ap.parse_args(argv)

    try:
        manifest = export(args.model, args.table, args.output, tensor_name=args.tensor)
    except ModelNotFound as exc:
        print(f"ttemb-export: model not found: {exc}", file=sys.stderr)
        return 2
    except NotAnEmbedding as exc:
        print(f"ttemb-export: {exc}", file=sys.stderr)
        return 3
    for line in manifest.kv_lines():
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
