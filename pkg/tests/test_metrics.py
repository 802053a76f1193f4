import io
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ttemb.errors import DivisionByZero, EmptySequence, LengthMismatch
from ttemb.metrics import (
    LogProbSequence,
    compression_ratios,
    delta_ln_ppl,
    delta_log_ppl,
    ln_perplexity,
    metrics_report,
    perplexity,
    read_logprobs,
    tradeoff_score,
)

logprobs = st.lists(st.floats(min_value=-20.0, max_value=0.0), min_size=1, max_size=40)


def test_uniform_quarter_normalized():
    s = LogProbSequence((math.log(0.25),) * 4)
    assert perplexity(s, normalized=True) == pytest.approx(4.0, rel=1e-12)


def test_certain_token():
    s = LogProbSequence((0.0,))
    assert ln_perplexity(s) == 0.0
    assert perplexity(s) == 1.0


def test_verbatim_sum_by_hand():
    s = LogProbSequence((math.log(0.5), math.log(0.25)))
    assert ln_perplexity(s) == pytest.approx(math.log(8.0), rel=1e-14)


def test_empty_sequence_rejected():
    with pytest.raises(EmptySequence):
        ln_perplexity(LogProbSequence(()))


def test_positive_or_non_finite_values_rejected():
    with pytest.raises(ValueError):
        LogProbSequence((0.5,))
    with pytest.raises(ValueError):
        LogProbSequence((float("nan"),))
    with pytest.raises(ValueError):
        LogProbSequence((float("-inf"),))


@given(logprobs)
@settings(max_examples=150, deadline=None)
def test_exp_ln_identity(values):
    s = LogProbSequence(tuple(values))
    assert perplexity(s) == pytest.approx(math.exp(ln_perplexity(s)), rel=1e-12)


def test_delta_identical_sequences_zero():
    s = LogProbSequence((math.log(0.5), math.log(0.125)))
    assert delta_ln_ppl(s, s) == 0.0


def test_delta_half_as_likely_closed_form():
    n = 7
    before = LogProbSequence((math.log(0.5),) * n)
    after = LogProbSequence((math.log(0.25),) * n)
    assert delta_ln_ppl(before, after) == pytest.approx(n * math.log(2.0), rel=1e-12)


@given(logprobs, logprobs)
@settings(max_examples=150, deadline=None)
def test_delta_antisymmetry_and_difference_form(a, b):
    n = min(len(a), len(b))
    sa, sb = LogProbSequence(tuple(a[:n])), LogProbSequence(tuple(b[:n]))
    assert delta_ln_ppl(sa, sb) == -delta_ln_ppl(sb, sa)
    assert delta_ln_ppl(sa, sb) == ln_perplexity(sb) - ln_perplexity(sa)


def test_delta_length_mismatch():
    with pytest.raises(LengthMismatch):
        delta_ln_ppl(LogProbSequence((-1.0,)), LogProbSequence((-1.0, -2.0)))


def test_compression_ratios_examples():
    ratios = compression_ratios(27, 9)
    assert ratios.eta == 2.0
    assert ratios.eta_emb == pytest.approx(2 / 3)
    assert ratios.phi == ratios.eta_emb
    assert compression_ratios(10, 10) == (0.0, 0.0, 0.0)
    with pytest.raises(DivisionByZero):
        compression_ratios(10, 0)
    with pytest.raises(ValueError):
        compression_ratios(0, 0)
    with pytest.raises(ValueError):
        compression_ratios(5, 9)


@given(st.integers(1, 10**9), st.integers(1, 10**9))
@settings(max_examples=150, deadline=None)
def test_reduction_equals_eta_over_one_plus_eta(a, b):
    orig, cmpr = max(a, b), min(a, b)
    ratios = compression_ratios(orig, cmpr)
    assert ratios.eta_emb == pytest.approx(ratios.eta / (1 + ratios.eta), rel=1e-12)


def test_tradeoff_score():
    assert tradeoff_score(0.0, 1.5) == 0.0
    assert tradeoff_score(0.3, 2.0) == pytest.approx(0.15)
    assert tradeoff_score(0.3, 4.0) == pytest.approx(0.075)
    with pytest.raises(DivisionByZero):
        tradeoff_score(0.3, 0.0)


def test_delta_log_ppl_base_10():
    before = LogProbSequence((math.log(0.5),) * 10)
    after = LogProbSequence((math.log(0.05),) * 10)
    assert delta_log_ppl(before, after, base=10.0) == pytest.approx(10.0, rel=1e-12)
    assert delta_log_ppl(before, after, base=math.e) == pytest.approx(
        delta_ln_ppl(before, after)
    )


def test_read_logprobs_stream_and_errors():
    s = read_logprobs(io.StringIO("-0.5\n\n-1.25\n-0.0\n"))
    assert s.values == (-0.5, -1.25, -0.0)
    with pytest.raises(ValueError):
        read_logprobs(io.StringIO("-0.5\nbogus\n"))


def test_read_logprobs_from_path(tmp_path):
    path = tmp_path / "lp.txt"
    path.write_text("-1.0\n-2.0\n")
    assert read_logprobs(path).values == (-1.0, -2.0)


def test_metrics_report_shapes():
    before = LogProbSequence((-1.0, -1.0))
    after = LogProbSequence((-1.5, -1.5))
    lines, row = metrics_report(before, after, orig_params=100, cmpr_params=50)
    keys = [line.split("=", 1)[0] for line in lines]
    assert keys == [
        "ln_ppl_before", "ln_ppl_after", "delta_ln_ppl", "delta_lg_ppl",
        "eta", "eta_emb", "phi", "tradeoff",
    ]
    assert len(row.split(",")) == len(keys)
