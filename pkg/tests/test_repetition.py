import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gkpsim.core import ParameterError
from gkpsim.repetition import (
    Syndrome2,
    decode_majority,
    decode_ml,
    extract_syndrome,
    repetition_batch,
    run_repetition_trial,
)
from gkpsim.stats import mcnemar_pvalue

F, T = False, True
ALL_FLIPS = list(itertools.product((F, T), repeat=3))
ALL_SYNDROMES = [Syndrome2(a, b) for a in (1, -1) for b in (1, -1)]
rates3 = st.tuples(*[st.floats(min_value=1e-9, max_value=1 - 1e-9)] * 3)


def test_syndrome_examples():
    assert extract_syndrome((F, F, F)) == Syndrome2(1, 1)
    assert extract_syndrome((T, F, F)) == Syndrome2(-1, 1)
    assert extract_syndrome((F, T, F)) == Syndrome2(-1, -1)


def test_syndrome_rejects_bad_values():
    with pytest.raises(ParameterError):
        Syndrome2(0, 1)


def test_majority_examples():
    assert decode_majority(Syndrome2(-1, -1)) == (F, T, F)
    assert decode_majority(Syndrome2(1, -1)) == (F, F, T)
    assert decode_majority(Syndrome2(1, 1)) == (F, F, F)


def test_ml_examples():
    assert decode_ml(Syndrome2(-1, 1), (0.3, 0.05, 0.05)) == (T, F, F)
    assert decode_ml(Syndrome2(-1, 1), (0.01, 0.45, 0.45)) == (F, T, T)
    assert decode_ml(Syndrome2(1, 1), (0.49, 0.3, 0.1)) == (F, F, F)


def test_ml_tie_goes_to_lighter_pattern():
    # p1(1-p2)(1-p3) == (1-p1)p2p3 when every rate is 1/2.
    assert decode_ml(Syndrome2(-1, 1), (0.5, 0.5, 0.5)) == (T, F, F)


@given(st.sampled_from(ALL_SYNDROMES), rates3)
def test_ml_correction_reproduces_syndrome(s, rates):
    assert extract_syndrome(decode_ml(s, rates)) == s
    assert extract_syndrome(decode_majority(s)) == s


@pytest.mark.parametrize("p", [1e-6, 0.01, 0.2, 0.49])
def test_equal_rates_match_majority(p):
    for s in ALL_SYNDROMES:
        assert decode_ml(s, (p, p, p)) == decode_majority(s)


def test_ml_handles_extreme_rates():
    assert decode_ml(Syndrome2(-1, 1), (0.0, 1.0, 1.0)) == (F, T, T)


def test_batch_matches_scalar_decoders():
    rng = np.random.default_rng(3)
    shifts = rng.normal(0, 0.55, (2000, 3))
    ml_err, avg_err = repetition_batch(shifts, 0.55)
    from gkpsim.analytics import RatePair, conditional_error
    from gkpsim.core import wrap_to_fundamental

    q, n = wrap_to_fundamental(shifts)
    for i in range(shifts.shape[0]):
        flips = tuple(bool(x) for x in n[i] & 1)
        s = extract_syndrome(flips)
        rates = conditional_error(q[i], RatePair(0.55))
        ml = decode_ml(s, rates)
        assert ml_err[i] == (sum(a ^ b for a, b in zip(ml, flips)) % 2 == 1)
        assert avg_err[i] == (sum(a ^ b for a, b in zip(decode_majority(s), flips)) % 2 == 1)


def test_trial_wrapper():
    rng = np.random.default_rng(0)
    assert run_repetition_trial(0.1, rng, "ml") in (True, False)
    with pytest.raises(ParameterError):
        run_repetition_trial(0.0, rng)


def test_small_sigma_rarely_fails():
    shifts = np.random.default_rng(1).normal(0, 0.1, (10**5, 3))
    ml_err, avg_err = repetition_batch(shifts, 0.1)
    assert ml_err.mean() < 1e-4 and avg_err.mean() < 1e-4


def test_modes_agree_at_moderate_sigma():
    shifts = np.random.default_rng(2).normal(0, 0.3, (10**5, 3))
    ml_err, avg_err = repetition_batch(shifts, 0.3)
    assert np.mean(ml_err == avg_err) > 0.99


def test_likelihood_decoding_beats_majority_at_sigma_05():
    shifts = np.random.default_rng(20171207).normal(0, 0.5, (10**6, 3))
    ml_err, avg_err = repetition_batch(shifts, 0.5)
    assert ml_err.sum() < avg_err.sum()
    assert mcnemar_pvalue(int(np.sum(ml_err & ~avg_err)), int(np.sum(avg_err & ~ml_err))) < 0.05
