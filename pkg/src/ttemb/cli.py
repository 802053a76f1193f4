"""Command-line interface.

Subcommands: compress, reconstruct, add-token, rm-token, stats, plan-shape,
energy, bench, export-dense.  Option values resolve in priority order:
explicit flag, then TTEMB_<NAME> environment variable, then a --config
key=value file, then the built-in default.  Output is machine-parseable
(key=value lines or CSV); --pretty switches to human formatting.

Exit codes: 0 success, 1 usage, 2 I/O (including a held write lock),
3 numeric or domain errors, 4 file-format errors.  Mutating commands write
the whole file to a temp path and atomically rename, holding an advisory
lock, so a crash or a concurrent writer never corrupts a store.
"""

from __future__ import annotations

import argparse
import contextlib
import math
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import energy as energy_mod
from . import store
from .errors import FormatError, ShapeMismatch, TtembError
from .formats import read_emb1, write_emb1
from .shapes import plan
from .svd_baseline import compress_table, lrt1_summary
from .ttsvd import CompressSpec, structural_max_ranks

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_DOMAIN = 3
EXIT_FORMAT = 4

ENV_PREFIX = "TTEMB_"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; the documented usage code is 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _load_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, value = line.partition("=")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _resolve(args, name: str, parse, default=None):
    """Flag > environment > config file > built-in default."""
    value = getattr(args, name, None)
    if value is None:
        env = os.environ.get(ENV_PREFIX + name.upper())
        cfg = args.config_values.get(name)
        value = env if env is not None else cfg
        if value is None:
            return default
    if isinstance(value, str) and parse is not str:
        return parse(value)
    return value


def _require(args, name: str, parse, flag: str):
    value = _resolve(args, name, parse)
    if value is None:
        raise UsageError(f"missing required option {flag}")
    return value


def _parse_shape(text: str) -> tuple[int, ...]:
    try:
        shape = tuple(int(part) for part in text.split(","))
    except ValueError:
        raise UsageError(f"bad shape {text!r}, expected comma-separated integers") from None
    if not shape:
        raise UsageError("shape must have at least one factor")
    return shape


def _parse_ids(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",")]
    except ValueError:
        raise UsageError(f"bad id list {text!r}, expected comma-separated integers") from None


def _parse_bool(text: str) -> bool:
    return text.strip().lower() in ("1", "true", "yes", "on")


def _parse_uniform(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise UsageError(f"bad uniform triple {text!r}, expected N,I,r")
    return tuple(int(p) for p in parts)  # type: ignore[return-value]


def _fmt_eta(eta: float) -> str:
    return f"{eta:.1f}" if eta == int(eta) else f"{eta:.6g}"


@contextlib.contextmanager
def _write_lock(path: str):
    """Advisory single-writer lock; readers never take it."""
    import fcntl

    lock_path = path + ".lock"
    fh = open(lock_path, "a")
    try:
        try:
            fcntl.flock(fh.fileno(), fcntl.LOCK_EX | fcntl.LOCK_NB)
        except BlockingIOError:
            raise OSError(f"another process holds the write lock on {path}") from None
        yield
    finally:
        fh.close()


def _build_spec(d: int, args) -> CompressSpec:
    shape_text = _resolve(args, "shape", str)
    auto = _resolve(args, "auto_shape", str)
    if shape_text is not None and auto is not None:
        raise UsageError("--shape and --auto-shape are mutually exclusive")
    if shape_text is not None:
        shape = _parse_shape(shape_text)
        if math.prod(shape) != d:
            raise ShapeMismatch(f"prod{shape} = {math.prod(shape)} != embedding dim {d}")
    else:
        auto = auto or "max"
        if auto == "max":
            shape = plan(d, "max").shape
        elif auto.startswith("order:"):
            shape = plan(d, "order", order=int(auto.split(":", 1)[1])).shape
        else:
            raise UsageError(f"bad --auto-shape {auto!r}, expected max or order:N")
    eps = _resolve(args, "eps", float, 0.0)
    max_rank = _resolve(args, "max_rank", int)
    structural = structural_max_ranks(shape)
    caps = structural if max_rank is None else tuple(min(max_rank, m) for m in structural)
    return CompressSpec(shape=shape, max_ranks=caps, epsilon=eps)


def _print_ratios(vocab: store.CompressedVocab, pretty: bool) -> None:
    dense = len(vocab) * vocab.d
    lines = {
        "V": len(vocab),
        "d": vocab.d,
        "shape": ",".join(map(str, vocab.shape)),
        "eps": vocab.epsilon,
        "total_params": vocab.total_params,
        "dense_params": dense,
    }
    if dense > 0 and vocab.total_params > 0:
        # Computed inline: eta can go negative when a lossless train costs
        # more than the dense row, which compression_ratios rejects.
        eta = dense / vocab.total_params - 1.0
        reduction = (dense - vocab.total_params) / dense
        lines["eta"] = _fmt_eta(eta)
        lines["eta_emb"] = f"{reduction:.6g}"
        lines["phi_emb"] = f"{reduction:.6g}"
    if pretty:
        width = max(len(k) for k in lines)
        for k, v in lines.items():
            print(f"{k:<{width}}  {v}")
    else:
        for k, v in lines.items():
            print(f"{k}={v}")


def _cmd_compress(args) -> int:
    table = read_emb1(_require(args, "input", str, "--input"))
    out_path = _require(args, "output", str, "--output")
    spec = _build_spec(table.shape[1], args)
    vocab = store.build(table, spec)
    with _write_lock(out_path):
        vocab.save(out_path)
    _print_ratios(vocab, args.pretty)
    return EXIT_OK


def _cmd_reconstruct(args) -> int:
    vocab = store.load(_require(args, "vocab", str, "--vocab"))
    ids = _require(args, "ids", _parse_ids, "--ids")
    rows = vocab.lookup_batch(ids)
    write_emb1(_require(args, "output", str, "--output"), rows)
    print(f"rows={len(ids)}")
    print(f"d={vocab.d}")
    return EXIT_OK


def _cmd_add_token(args) -> int:
    path = _require(args, "vocab", str, "--vocab")
    token_id = _require(args, "id", int, "--id")
    emb = read_emb1(_require(args, "embedding", str, "--embedding"))
    if emb.shape[0] != 1:
        raise ShapeMismatch(f"embedding file must contain exactly one row, got {emb.shape[0]}")
    with _write_lock(path):
        vocab = store.load(path).add_token(token_id, emb[0])
        vocab.save(path)
    print(f"added={token_id}")
    print(f"total_params={vocab.total_params}")
    return EXIT_OK


def _cmd_rm_token(args) -> int:
    path = _require(args, "vocab", str, "--vocab")
    token_id = _require(args, "id", int, "--id")
    with _write_lock(path):
        vocab = store.load(path).remove_token(token_id)
        vocab.save(path)
    print(f"removed={token_id}")
    print(f"total_params={vocab.total_params}")
    return EXIT_OK


def _cmd_stats(args) -> int:
    vocab = store.load(_require(args, "vocab", str, "--vocab"))
    _print_ratios(vocab, args.pretty)
    for rank, count in vocab.rank_histogram().items():
        print(f"rank_hist_{rank}={count}")
    svd_rank = _resolve(args, "svd_rank", int)
    if svd_rank is not None and len(vocab) >= 1:
        dense = np.stack([vocab.lookup(i) for i in sorted(vocab.entries)])
        print(lrt1_summary(compress_table(dense, svd_rank)))
    return EXIT_OK


def _cmd_plan_shape(args) -> int:
    d = _require(args, "d", int, "--d")
    policy = _resolve(args, "policy", str, "max")
    rank_cap = _resolve(args, "max_rank", int, 1)
    eps = _resolve(args, "eps", float, 0.0)
    if policy == "max":
        result = plan(d, "max", rank_cap=rank_cap, epsilon=eps)
    elif policy.startswith("order:"):
        result = plan(d, "order", order=int(policy.split(":", 1)[1]), rank_cap=rank_cap, epsilon=eps)
    elif policy == "explicit":
        shape = _parse_shape(_require(args, "shape", str, "--shape"))
        result = plan(d, "explicit", shape=shape, rank_cap=rank_cap, epsilon=eps)
    else:
        raise UsageError(f"bad --policy {policy!r}, expected max, order:N, or explicit")
    shape_text = ",".join(map(str, result.shape))
    print(f"{shape_text} params {result.predicted_params} eta {_fmt_eta(result.predicted_eta)}")
    return EXIT_OK


def _cmd_energy(args) -> int:
    nu, tau = 1.0, 0.2
    preset_name = _resolve(args, "preset", str)
    if preset_name is not None:
        try:
            nu, tau = energy_mod.preset(preset_name)
        except KeyError:
            raise UsageError(
                f"unknown preset {preset_name!r}; choose from {', '.join(energy_mod.preset_names())}"
            ) from None
    nu = _resolve(args, "nu", float, nu)
    tau = _resolve(args, "tau", float, tau)
    uniform = _resolve(args, "uniform", _parse_uniform)
    p = _resolve(args, "p", int)
    if p is None and uniform is None:
        raise UsageError("need --p or --uniform N,I,r")
    cfg = energy_mod.EnergyConfig(
        V=_resolve(args, "V", int, 50257),
        d=_resolve(args, "d", int, 768),
        l=_resolve(args, "l", int, 50),
        nu=nu, tau=tau, p=p, uniform=uniform,
        k=_resolve(args, "k", int),
        mode=_resolve(args, "mode", str, energy_mod.MODE_FORMULA),
        flops_per_token=_resolve(args, "flops_per_token", int),
    )
    report = energy_mod.compare(cfg)
    if args.pretty:
        for line in report.kv_lines():
            print(line)
    else:
        print(energy_mod.CSV_HEADER)
        print(report.csv_row())
    store_params = _resolve(args, "store_params", int)
    if store_params is not None:
        for link in ("wired", "wireless"):
            pj = energy_mod.download_energy_pj(store_params, link=link, level="mid")
            print(f"download_{link}_mid_pj={pj}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    suite = _resolve(args, "suite", str, "all")
    wanted = {"all": bench_mod.SUITE_OPS, "compress": ("compress",),
              "reconstruct": ("reconstruct",), "lookup": ("lookup-text",)}
    if suite not in wanted:
        raise UsageError(f"bad --suite {suite!r}, expected all, compress, reconstruct, or lookup")
    results = bench_mod.default_suite(
        V=_resolve(args, "V", int, 128),
        d=_resolve(args, "d", int, 64),
        eps=_resolve(args, "eps", float, 0.1),
        l=_resolve(args, "l", int, 50),
        reps=_resolve(args, "reps", int, bench_mod.DEFAULT_REPS),
        seed=_resolve(args, "seed", int, 0),
        ops=wanted[suite],
    )
    print(bench_mod.CSV_HEADER)
    for result in results:
        print(result.csv_row())
    if args.pretty:
        for line in bench_mod.reference_lines():
            print(line)
        for result in results:
            print(f"# {result.op}: median-of-means {result.median_of_means:.6g} {result.unit}")
    return EXIT_OK


def _cmd_export_dense(args) -> int:
    vocab = store.load(_require(args, "vocab", str, "--vocab"))
    ids = sorted(vocab.entries)
    if ids != list(range(len(ids))):
        print("warning: token ids are not dense 0..V-1; row order is ascending id", file=sys.stderr)
    rows = vocab.lookup_batch(ids) if ids else np.empty((0, vocab.d))
    write_emb1(_require(args, "output", str, "--output"), rows)
    print(f"rows={len(ids)}")
    print(f"d={vocab.d}")
    return EXIT_OK


_COMMANDS = {
    "compress": _cmd_compress,
    "reconstruct": _cmd_reconstruct,
    "add-token": _cmd_add_token,
    "rm-token": _cmd_rm_token,
    "stats": _cmd_stats,
    "plan-shape": _cmd_plan_shape,
    "energy": _cmd_energy,
    "bench": _cmd_bench,
    "export-dense": _cmd_export_dense,
}


def _build_parser() -> _Parser:
    parser = _Parser(prog="ttemb", description="Tensor-train token embedding compression toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="key=value defaults file")
        p.add_argument("--pretty", action="store_const", const=True, default=None,
                       help="human-readable output")
        return p

    p = add("compress", "compress a dense EMB1 table into a TTE1 store")
    p.add_argument("--input", help="dense EMB1 input table")
    p.add_argument("--output", help="TTE1 output path")
    p.add_argument("--shape", help="explicit shape, e.g. 8,8,12")
    p.add_argument("--auto-shape", dest="auto_shape", help="max or order:N (default max)")
    p.add_argument("--eps", type=float, help="relative accuracy target (default 0)")
    p.add_argument("--max-rank", dest="max_rank", type=int,
                   help="uniform rank cap (default: structural maximum)")

    p = add("reconstruct", "decompress selected token ids into an EMB1 file")
    p.add_argument("--vocab", help="TTE1 store")
    p.add_argument("--ids", help="comma-separated token ids")
    p.add_argument("--output", help="EMB1 output path")

    p = add("add-token", "compress and insert one embedding row")
    p.add_argument("--vocab", help="TTE1 store (modified in place, atomically)")
    p.add_argument("--id", type=int, help="new token id")
    p.add_argument("--embedding", help="single-row EMB1 file")

    p = add("rm-token", "remove one token from the store")
    p.add_argument("--vocab", help="TTE1 store (modified in place, atomically)")
    p.add_argument("--id", type=int, help="token id to remove")

    p = add("stats", "report parameter counts, ratios, and the rank histogram")
    p.add_argument("--vocab", help="TTE1 store")
    p.add_argument("--svd-rank", dest="svd_rank", type=int,
                   help="also factor the dense table at this rank and print an LRT1 line")

    p = add("plan-shape", "enumerate and rank factorizations of an embedding dim")
    p.add_argument("--d", type=int, help="embedding dimension")
    p.add_argument("--policy", help="max (default), order:N, or explicit")
    p.add_argument("--shape", help="shape for --policy explicit")
    p.add_argument("--max-rank", dest="max_rank", type=int, help="rank cap for prediction (default 1)")
    p.add_argument("--eps", type=float, help="accuracy target carried into the plan (default 0)")

    p = add("energy", "analytic inference-energy comparison, CSV")
    p.add_argument("--preset", help=f"one of {', '.join(energy_mod.preset_names())}")
    p.add_argument("--V", type=int, help="vocabulary size (default 50257)")
    p.add_argument("--d", type=int, help="embedding dim (default 768)")
    p.add_argument("--l", type=int, help="query length in tokens (default 50)")
    p.add_argument("--p", type=int, help="tensor-train params per token")
    p.add_argument("--uniform", help="uniform N,I,r triple instead of --p")
    p.add_argument("--k", type=int, help="low-rank-table rank")
    p.add_argument("--nu", type=float, help="memory energy per float32, pJ (default 1.0)")
    p.add_argument("--tau", type=float, help="compute energy per float32, pJ (default 0.2)")
    p.add_argument("--mode", help=f"{energy_mod.MODE_FORMULA} (default) or {energy_mod.MODE_EXACT}")
    p.add_argument("--flops-per-token", dest="flops_per_token", type=int,
                   help="chain flops for exact-count mode")
    p.add_argument("--store-params", dest="store_params", type=int,
                   help="also report one-time download energy for this many scalars")

    p = add("bench", "run the timing suite on a seeded synthetic table, CSV")
    p.add_argument("--suite", help="all (default), compress, reconstruct, or lookup")
    p.add_argument("--V", type=int, help="table rows (default 128)")
    p.add_argument("--d", type=int, help="embedding dim (default 64)")
    p.add_argument("--eps", type=float, help="accuracy target (default 0.1)")
    p.add_argument("--l", type=int, help="text length for lookup (default 50)")
    p.add_argument("--reps", type=int, help=f"repetitions (default {bench_mod.DEFAULT_REPS})")
    p.add_argument("--seed", type=int, help="workload seed (default 0)")

    p = add("export-dense", "decompress the whole store back to EMB1")
    p.add_argument("--vocab", help="TTE1 store")
    p.add_argument("--output", help="EMB1 output path")

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        args.config_values = _load_config(getattr(args, "config", None))
        args.pretty = _resolve(args, "pretty", _parse_bool, False)
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"ttemb: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FormatError as exc:
        print(f"ttemb: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (TtembError, ValueError, ZeroDivisionError, ArithmeticError) as exc:
        print(f"ttemb: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except OSError as exc:
        print(f"ttemb: i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
