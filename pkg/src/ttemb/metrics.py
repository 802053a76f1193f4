"""Evaluation math: perplexity forms, their deltas, and compression ratios.

Perplexity here is the unnormalized product form, whose logarithm is the
plain negative sum of per-token log-probabilities; the familiar
per-token-normalized variant is available behind a flag and is never
silently substituted.  Log-perplexity deltas are linear in the sequence,
which is what makes them comparable against the (also linear) compression
ratio; the trade-off score is their quotient.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .errors import DivisionByZero, EmptySequence, LengthMismatch


@dataclass(frozen=True)
class LogProbSequence:
    """Per-token natural-log probabilities ln p(x_i | x_<i), each <= 0."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        for v in vals:
            if not math.isfinite(v):
                raise ValueError(f"log-probabilities must be finite, got {v}")
            if v > 0.0:
                raise ValueError(f"log-probabilities must be <= 0, got {v}")
        object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.values)


def _as_sequence(s) -> LogProbSequence:
    return s if isinstance(s, LogProbSequence) else LogProbSequence(tuple(s))


def ln_perplexity(s, normalized: bool = False) -> float:
    """Negative sum of log-probs; divided by sequence length if normalized."""
    s = _as_sequence(s)
    if len(s) == 0:
        raise EmptySequence("perplexity of an empty sequence is undefined")
    total = -math.fsum(s.values)
    return total / len(s) if normalized else total


def perplexity(s, normalized: bool = False) -> float:
    return math.exp(ln_perplexity(s, normalized=normalized))


def delta_ln_ppl(before, after) -> float:
    """Log-perplexity change, after minus before.

    Equals the sum of per-token log-ratios ln(p_before / p_after);
    antisymmetric under swapping the arguments.
    """
    before = _as_sequence(before)
    after = _as_sequence(after)
    if len(before) != len(after):
        raise LengthMismatch(f"sequence lengths differ: {len(before)} vs {len(after)}")
    return ln_perplexity(after) - ln_perplexity(before)


def delta_log_ppl(before, after, base: float = 10.0) -> float:
    """delta_ln_ppl rebased; base 10 is the trade-off score convention."""
    return delta_ln_ppl(before, after) / math.log(base)


class CompressionRatios(NamedTuple):
    eta: float
    eta_emb: float
    phi: float


def compression_ratios(orig_params: int, cmpr_params: int) -> CompressionRatios:
    """(eta, eta_emb, phi) from original and compressed parameter counts.

    eta = (orig - cmpr) / cmpr; eta_emb and phi are both the reduction
    fraction (orig - cmpr) / orig, one quantity under its two customary
    names.  They satisfy reduction = eta / (1 + eta).
    """
    if orig_params <= 0:
        raise ValueError(f"original parameter count must be > 0, got {orig_params}")
    if not 0 <= cmpr_params <= orig_params:
        raise ValueError(f"compressed count {cmpr_params} outside 0..{orig_params}")
    if cmpr_params == 0:
        raise DivisionByZero("eta is undefined for a zero compressed parameter count")
    eta = (orig_params - cmpr_params) / cmpr_params
    reduction = (orig_params - cmpr_params) / orig_params
    return CompressionRatios(eta, reduction, reduction)


def tradeoff_score(delta_log_ppl_value: float, eta_emb: float) -> float:
    """Performance-loss-per-compression quotient; lower is better."""
    if eta_emb <= 0:
        raise DivisionByZero("trade-off score needs a positive reduction fraction")
    return delta_log_ppl_value / eta_emb


def read_logprobs(source) -> LogProbSequence:
    """Parse a newline-delimited stream of decimal log-probs, one per token.

    Accepts a path or an open text stream; blank lines are skipped.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as fh:
            return read_logprobs(fh)
    values = []
    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            values.append(float(line))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: not a decimal value: {line!r}") from exc
    return LogProbSequence(tuple(values))


METRICS_CSV_HEADER = "ln_ppl_before,ln_ppl_after,delta_ln_ppl,delta_lg_ppl,eta,eta_emb,phi,tradeoff"


def metrics_report(
    before, after, orig_params: int, cmpr_params: int
) -> tuple[list[str], str]:
    """Key=value lines plus one CSV row for a before/after evaluation."""
    ratios = compression_ratios(orig_params, cmpr_params)
    d_ln = delta_ln_ppl(before, after)
    d_lg = d_ln / math.log(10.0)
    score = tradeoff_score(d_lg, ratios.eta_emb) if ratios.eta_emb > 0 else float("nan")
    fields = {
        "ln_ppl_before": ln_perplexity(before),
        "ln_ppl_after": ln_perplexity(after),
        "delta_ln_ppl": d_ln,
        "delta_lg_ppl": d_lg,
        "eta": ratios.eta,
        "eta_emb": ratios.eta_emb,
        "phi": ratios.phi,
        "tradeoff": score,
    }
    lines = [f"{k}={v!r}" for k, v in fields.items()]
    row = ",".join(repr(v) for v in fields.values())
    return lines, row
