import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate, stats

from gkpsim.analytics import (
    RatePair,
    SqueezeParams,
    SteaneOutcome,
    average_error,
    average_success,
    conditional_error,
    conditional_success,
    double_measurement_decision,
    double_measurement_weights,
    outcome_density,
    posterior_params,
    postselect_rate,
    rate_variance,
    sigma_at_error_rate,
    squeezed_marginal_density,
)
from gkpsim.core import HALF_SQRT_PI, SQRT_PI, ParameterError, wrap_to_fundamental
from gkpsim.oracles import squeezed_marginal_tv

in_interval = st.floats(min_value=-HALF_SQRT_PI, max_value=HALF_SQRT_PI, exclude_max=True)
sigmas = st.floats(min_value=0.05, max_value=1.5)


def quad(f, a=-HALF_SQRT_PI, b=HALF_SQRT_PI):
    return integrate.quad(f, a, b, epsabs=1e-12, epsrel=1e-12, limit=200)[0]


def test_rate_pair_validation():
    for kw in ({"sigma1": 0.0}, {"sigma1": 0.5, "sigma2": -0.1}, {"sigma1": 0.5, "k": 0}, {"sigma1": 0.5, "k": 9}):
        with pytest.raises(ParameterError):
            RatePair(**kw)
    assert RatePair(0.3, 0.4).sigma == pytest.approx(0.5)


def test_peak_conditional_success_at_sigma_06():
    assert conditional_success(0.0, RatePair(0.6)) == pytest.approx(0.975, abs=0.005)


def test_conditional_success_tiny_sigma():
    assert conditional_success(0.0, RatePair(1e-3)) == 1.0


def test_conditional_error_complements_success():
    q = np.linspace(-HALF_SQRT_PI, HALF_SQRT_PI, 101, endpoint=False)
    rp = RatePair(0.5, 0.2, 2)
    assert np.allclose(conditional_success(q, rp) + conditional_error(q, rp), 1.0, atol=1e-15)
    # Direct evaluation keeps precision where the complement would round to zero.
    assert 0 < conditional_error(0.0, RatePair(0.1)) < 1e-20


def test_conditional_success_near_boundary_matches_simulation():
    rp = RatePair(0.6)
    rng = np.random.default_rng(11)
    lo = HALF_SQRT_PI - 0.01
    hits = succ = 0
    for _ in range(10):
        w = rng.normal(0.0, 0.6, 10**6)
        q, n = wrap_to_fundamental(w)
        sel = q >= lo
        hits += int(sel.sum())
        succ += int(np.count_nonzero(n[sel] % 2 == 0))
    expected = quad(lambda x: conditional_success(x, rp) * outcome_density(x, rp), lo, HALF_SQRT_PI) / quad(
        lambda x: outcome_density(x, rp), lo, HALF_SQRT_PI
    )
    se = math.sqrt(expected * (1 - expected) / hits)
    assert abs(succ / hits - expected) < 3 * se
    assert conditional_success(HALF_SQRT_PI - 1e-9, rp) == pytest.approx(expected, abs=0.01)


def test_average_success_sigma_06():
    assert average_success(RatePair(0.6)) == pytest.approx(0.86, abs=0.01)


def test_average_success_matches_monte_carlo():
    rng = np.random.default_rng(5)
    sigma = 0.45
    ok = 0
    total = 10**7
    for _ in range(10):
        w = rng.normal(0.0, sigma, total // 10)
        _, n = wrap_to_fundamental(w)
        ok += int(np.count_nonzero(n % 2 == 0))
    p = average_success(RatePair(sigma))
    assert abs(ok / total - p) < 3 * math.sqrt(p * (1 - p) / total)


def test_average_success_tiny_error_at_sigma_02():
    # Analytic value is ~1e-5 error: check the tail sum against the Gaussian tail directly.
    err = average_error(RatePair(0.2))
    assert err == pytest.approx(2 * stats.norm.sf(HALF_SQRT_PI / 0.2), rel=1e-6)
    assert average_success(RatePair(0.2)) + err == pytest.approx(1.0, abs=1e-15)


def test_bit_flip_threshold_width():
    sigma = sigma_at_error_rate(0.103)
    assert 0.54 < sigma < 0.55
    assert average_error(RatePair(0.535)) == pytest.approx(0.103, abs=0.01)


def test_outcome_density_normalized():
    for sigma in (0.2, 0.6, 1.0):
        assert quad(lambda q: outcome_density(q, RatePair(sigma))) == pytest.approx(1.0, abs=1e-6)


def test_outcome_density_peaks_at_centre():
    rp = RatePair(0.6)
    assert outcome_density(0.0, rp) > outcome_density(HALF_SQRT_PI * 0.999, rp)


def test_outcome_histogram_matches_density():
    rp = RatePair(0.6)
    q, _ = wrap_to_fundamental(np.random.default_rng(9).normal(0.0, 0.6, 10**6))
    edges = np.linspace(-HALF_SQRT_PI, HALF_SQRT_PI, 41)
    observed, _ = np.histogram(q, edges)
    probs = np.array([quad(lambda x: outcome_density(x, rp), a, b) for a, b in zip(edges[:-1], edges[1:])])
    expected = probs / probs.sum() * q.size
    assert stats.chisquare(observed, expected).pvalue > 1e-3


def test_posterior_params():
    m1, m2, var = posterior_params(0.3, 1, RatePair(0.4, 0.4))
    assert m1 == pytest.approx(m2) and m1 == pytest.approx((0.3 + SQRT_PI) / 2)
    assert var == pytest.approx(0.4**2 * 0.4**2 / (2 * 0.4**2))
    m1, _, var = posterior_params(0.2, -1, RatePair(0.5, 0.0))
    assert m1 == pytest.approx(0.2 - SQRT_PI) and var == 0.0


@given(in_interval, st.integers(-3, 3), sigmas, sigmas)
def test_posterior_means_sum_to_observation(q, n, s1, s2):
    m1, m2, _ = posterior_params(q, n, RatePair(s1, s2))
    assert m1 + m2 == pytest.approx(q + n * SQRT_PI, abs=1e-12)


def test_rate_spread_limits():
    assert rate_variance(RatePair(0.05)) < 1e-4
    assert rate_variance(RatePair(3.0)) < 1e-2


def test_rate_spread_matches_simulation():
    rp = RatePair(0.5)
    q, _ = wrap_to_fundamental(np.random.default_rng(4).normal(0.0, 0.5, 10**6))
    empirical = np.std(conditional_success(q, rp))
    analytic = rate_variance(rp)
    assert analytic > 0.05
    assert empirical == pytest.approx(analytic, rel=0.01)


def test_postselection():
    rp = RatePair(0.6)
    keep, worst = postselect_rate(rp, HALF_SQRT_PI)
    assert keep == pytest.approx(1.0, abs=1e-12)
    assert worst == pytest.approx(conditional_success(HALF_SQRT_PI, rp))
    keep, worst = postselect_rate(rp, 0.0)
    assert keep == 0.0 and worst == pytest.approx(0.975, abs=0.005)
    grid = np.linspace(0, HALF_SQRT_PI, 100)
    fractions = [postselect_rate(rp, g)[0] for g in grid]
    assert np.all(np.diff(fractions) > 0)
    with pytest.raises(ParameterError):
        postselect_rate(rp, HALF_SQRT_PI + 0.1)


@pytest.mark.parametrize("sigma", [0.2, 0.45, 0.6, 0.9])
@pytest.mark.parametrize("k", [2, 3])
def test_bayes_consistency(sigma, k):
    rp = RatePair(sigma, 0.0, k)
    total = quad(lambda q: conditional_success(q, rp) * outcome_density(q, rp))
    assert total == pytest.approx(average_success(rp), abs=1e-6)


@pytest.mark.parametrize("sigma", [0.1, 0.3, 0.6, 1.0])
def test_monotone_on_half_interval(sigma):
    q = np.linspace(0, HALF_SQRT_PI, 1000, endpoint=False)
    assert np.all(np.diff(conditional_success(q, RatePair(sigma))) <= 0)


def test_comb_truncation_converged():
    q = np.linspace(-HALF_SQRT_PI, HALF_SQRT_PI, 500, endpoint=False)
    for sigma in (0.3, 0.45, 0.6):
        a, b = RatePair(sigma, 0, 2), RatePair(sigma, 0, 3)
        assert np.max(np.abs(conditional_success(q, a) - conditional_success(q, b))) < 1e-4
        assert np.max(np.abs(outcome_density(q, a) - outcome_density(q, b))) < 1e-4


@given(in_interval, sigmas, st.integers(1, 4))
def test_evenness(q, sigma, k):
    rp = RatePair(sigma, 0.0, k)
    assert conditional_success(q, rp) == pytest.approx(conditional_success(-q, rp), abs=1e-14)
    assert outcome_density(q, rp) == pytest.approx(outcome_density(-q, rp), rel=1e-12)


def test_steane_outcome_record():
    rp = RatePair(0.6)
    rec = SteaneOutcome.from_q_cor(0.4, rp)
    assert rec.p_err == pytest.approx(conditional_error(-0.4, rp))


def test_squeezed_marginal_close_to_gaussian():
    assert squeezed_marginal_tv(0.25) < 1e-3


def test_squeezed_marginal_even_and_normalized():
    d = SqueezeParams(0.3)
    u = np.random.default_rng(2).uniform(-SQRT_PI, SQRT_PI, 100)
    assert np.allclose(squeezed_marginal_density(d, u), squeezed_marginal_density(d, -u), rtol=1e-12)
    assert quad(lambda x: squeezed_marginal_density(d, x), -SQRT_PI, SQRT_PI) == pytest.approx(1.0, abs=1e-6)


def test_squeezed_marginal_rejects_bad_input():
    with pytest.raises(ParameterError):
        SqueezeParams(0.6)
    with pytest.raises(ParameterError):
        squeezed_marginal_density(SqueezeParams(0.3), 2.0)


def test_double_measurement_centre_is_even():
    even, p_even, p_odd = double_measurement_decision(0.0, 0.0, RatePair(0.6, 0.2))
    assert even and p_even > 0.99 and p_even + p_odd == pytest.approx(1.0)


@given(in_interval, in_interval)
def test_double_measurement_symmetric(q1, q2):
    rp = RatePair(0.6, 0.2)
    for model in ("closed_form", "exact"):
        a = double_measurement_decision(q1, q2, rp, model)
        b = double_measurement_decision(-q1, -q2, rp, model)
        assert a[1] == pytest.approx(b[1], abs=1e-12)


def test_double_measurement_needs_noisy_ancilla():
    with pytest.raises(ParameterError):
        double_measurement_weights(0.0, 0.0, RatePair(0.6, 0.0))


def test_exact_model_matches_simulated_covariance():
    # The exact model's quadratic form is the inverse covariance of (w1, w2).
    s1, s2 = 0.6, 0.2
    rng = np.random.default_rng(8)
    u0, u1, u2, u3 = rng.normal(0, s1, 10**6), *rng.normal(0, s2, (3, 10**6))
    cov = np.cov(np.stack([u0 + u1, u0 + u2 + u3]))
    expected = np.array([[s1**2 + s2**2, s1**2], [s1**2, s1**2 + 2 * s2**2]])
    assert np.allclose(cov, expected, atol=5e-3)
