"""Conditional-probability formulas for Steane error correction of GKP qubits.

The homodyne outcome of a Steane round is ``w = u1 + u2`` folded into the
fundamental interval, where ``u1 ~ N(0, sigma1^2)`` is the data shift and
``u2 ~ N(0, sigma2^2)`` the ancilla shift. Given the folded value ``q_cor``
the unknown tooth index ``n`` (``w = q_cor + n*sqrt(pi)``) has a posterior
proportional to ``exp(-(q_cor + n*sqrt(pi))^2 / (2 sigma^2))`` with
``sigma^2 = sigma1^2 + sigma2^2``.  Correction succeeds iff ``n`` is even.
Comb sums run over ``|n| <= k``.

All evaluators accept numpy arrays for the outcome argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy import integrate, optimize, special

from gkpsim.core import HALF_SQRT_PI, SQRT_PI, ParameterError, Real

QUAD_EPSABS = 1e-9
# Gaussian terms with exponent beyond this are below double precision.
TAIL_EXPONENT = 50.0


@dataclass(frozen=True)
class SqueezeParams:
    delta: float

    def __post_init__(self) -> None:
        if not (0 < self.delta <= 0.5):
            raise ParameterError(f"delta must lie in (0, 0.5], got {self.delta!r}")


@dataclass(frozen=True)
class RatePair:
    """Data and ancilla shift widths plus the comb truncation ``k``."""

    sigma1: float
    sigma2: float = 0.0
    k: int = 1

    def __post_init__(self) -> None:
        if not (self.sigma1 > 0 and math.isfinite(self.sigma1)):
            raise ParameterError(f"sigma1 must be positive and finite, got {self.sigma1!r}")
        if not (self.sigma2 >= 0 and math.isfinite(self.sigma2)):
            raise ParameterError(f"sigma2 must be non-negative and finite, got {self.sigma2!r}")
        if not (isinstance(self.k, (int, np.integer)) and 1 <= self.k <= 8):
            raise ParameterError(f"k must be an integer in [1, 8], got {self.k!r}")

    @property
    def sigma(self) -> float:
        return math.hypot(self.sigma1, self.sigma2)


@dataclass(frozen=True)
class SteaneOutcome:
    q_cor: float
    p_err: float

    @classmethod
    def from_q_cor(cls, q_cor: float, rp: RatePair) -> SteaneOutcome:
        return cls(float(q_cor), float(conditional_error(q_cor, rp)))


def _teeth(k: int) -> np.ndarray:
    return np.arange(-k, k + 1)


def _tooth_log_weights(q: Real, sigma: float, k: int) -> tuple[np.ndarray, np.ndarray]:
    teeth = _teeth(k)
    x = np.asarray(q, dtype=float)[..., None] + teeth * SQRT_PI
    return teeth, -(x * x) / (2.0 * sigma * sigma)


def _parity_split(q: Real, sigma: float, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Log of the even-tooth and odd-tooth weight sums."""
    teeth, logw = _tooth_log_weights(q, sigma, k)
    even = teeth % 2 == 0
    log_even = special.logsumexp(np.where(even, logw, -np.inf), axis=-1)
    log_odd = special.logsumexp(np.where(even, -np.inf, logw), axis=-1)
    return log_even, log_odd


def _scalarize(x: np.ndarray, like: Real) -> Real:
    return float(x) if np.ndim(like) == 0 else x


def conditional_success(q_cor: Real, rp: RatePair) -> Real:
    """Probability that the tooth index is even given the folded outcome."""
    log_even, log_odd = _parity_split(q_cor, rp.sigma, rp.k)
    # 1 / (1 + odd/even), stable for either sign of the log ratio
    out = special.expit(log_even - log_odd)
    return _scalarize(out, q_cor)


def conditional_error(q_cor: Real, rp: RatePair) -> Real:
    """``1 - conditional_success``, evaluated directly so small rates keep precision."""
    log_even, log_odd = _parity_split(q_cor, rp.sigma, rp.k)
    out = special.expit(log_odd - log_even)
    return _scalarize(out, q_cor)


def _tooth_range(sigma: float) -> int:
    # Enough teeth that the omitted windows sit beyond the tail exponent.
    return int(math.ceil(math.sqrt(2.0 * TAIL_EXPONENT) * sigma / (2.0 * SQRT_PI))) + 1


def average_success(rp: RatePair) -> float:
    """Unconditional probability that the summed shift lands on an even tooth."""
    sigma = rp.sigma
    m = np.arange(-_tooth_range(sigma), _tooth_range(sigma) + 1)
    lo = (2 * m - 0.5) * SQRT_PI / sigma
    hi = (2 * m + 0.5) * SQRT_PI / sigma
    # Difference of CDFs taken on the side of zero where it does not cancel.
    mass = np.where(lo >= 0, special.ndtr(-lo) - special.ndtr(-hi), special.ndtr(hi) - special.ndtr(lo))
    return float(mass.sum())


def average_error(rp: RatePair) -> float:
    sigma = rp.sigma
    m = np.arange(-_tooth_range(sigma), _tooth_range(sigma) + 1)
    lo = (2 * m + 0.5) * SQRT_PI / sigma
    hi = (2 * m + 1.5) * SQRT_PI / sigma
    mass = np.where(lo >= 0, special.ndtr(-lo) - special.ndtr(-hi), special.ndtr(hi) - special.ndtr(lo))
    return float(mass.sum())


def sigma_at_error_rate(target: float, k: int = 1) -> float:
    """Noise width whose unconditional logical error rate equals ``target``."""
    if not (0 < target < 0.5):
        raise ParameterError(f"target error rate must lie in (0, 0.5), got {target!r}")
    return optimize.brentq(lambda s: average_error(RatePair(s, 0.0, k)) - target, 1e-3, 10.0, xtol=1e-12)


def _comb_normalizer(sigma: float, k: int) -> float:
    # Integral of the truncated comb over the fundamental interval.
    return float(2.0 * special.ndtr((k + 0.5) * SQRT_PI / sigma) - 1.0)


def outcome_density(q_cor: Real, rp: RatePair) -> Real:
    """Density of the folded outcome under the k-truncated comb."""
    sigma = rp.sigma
    _, logw = _tooth_log_weights(q_cor, sigma, rp.k)
    dens = np.exp(logw).sum(axis=-1) / (sigma * math.sqrt(2.0 * math.pi))
    return _scalarize(dens / _comb_normalizer(sigma, rp.k), q_cor)


def posterior_params(q_cor: float, n: int, rp: RatePair) -> tuple[float, float, float]:
    """Posterior means of the data and ancilla shifts and their common variance.

    Conditions on ``u1 + u2 = q_cor + n*sqrt(pi)``.
    """
    s1sq, s2sq = rp.sigma1**2, rp.sigma2**2
    total = s1sq + s2sq
    w = q_cor + n * SQRT_PI
    mean_u1 = s1sq / total * w
    mean_u2 = w - mean_u1
    return mean_u1, mean_u2, s1sq * s2sq / total


def _integrate_even(f, upper: float = HALF_SQRT_PI) -> float:
    val, _ = integrate.quad(f, 0.0, upper, epsabs=QUAD_EPSABS, epsrel=1e-12, limit=200)
    return 2.0 * val


def rate_variance(rp: RatePair) -> float:
    """Spread (standard deviation) of the conditional success rate over outcomes.

    The centring mean is the density-weighted average of the conditional rate,
    so the result is an exact second central moment of the truncated model.
    """
    mean = _integrate_even(lambda q: conditional_success(q, rp) * outcome_density(q, rp))
    var = _integrate_even(lambda q: (conditional_success(q, rp) - mean) ** 2 * outcome_density(q, rp))
    return math.sqrt(max(var, 0.0))


def postselect_rate(rp: RatePair, q_sel: float) -> tuple[float, float]:
    """Kept fraction and worst kept success rate when discarding ``|q_cor| > q_sel``."""
    if not (0.0 <= q_sel <= HALF_SQRT_PI):
        raise ParameterError(f"q_sel must lie in [0, sqrt(pi)/2], got {q_sel!r}")
    sigma = rp.sigma
    teeth = _teeth(rp.k)
    centers = teeth * SQRT_PI
    kept = special.ndtr((q_sel - centers) / sigma) - special.ndtr((-q_sel - centers) / sigma)
    keep = float(kept.sum()) / _comb_normalizer(sigma, rp.k)
    return min(keep, 1.0), conditional_success(q_sel, rp)


def squeezed_marginal_density(delta: SqueezeParams, u: Real) -> Real:
    """Exact q-shift marginal of an approximate |0> code state, normalized on [-sqrt(pi), sqrt(pi)]."""
    ua = np.asarray(u, dtype=float)
    if np.any(np.abs(ua) > SQRT_PI):
        raise ParameterError("u must satisfy |u| <= sqrt(pi)")
    return _scalarize(_unnormalized_marginal(delta.delta, ua) / _marginal_norm(delta.delta), u)


def _unnormalized_marginal(d: float, u: np.ndarray) -> np.ndarray:
    # Peak offsets m (peaks at -2m*sqrt(pi)) and envelope lags t - m.
    m_max = int(math.ceil(math.sqrt(2.0 * TAIL_EXPONENT) * d / (2.0 * SQRT_PI))) + 1
    lag_max = int(math.ceil(math.sqrt(TAIL_EXPONENT / (2.0 * math.pi)) / d)) + 1
    m = np.arange(-m_max, m_max + 1)
    t = np.arange(-m_max - lag_max, m_max + lag_max + 1)
    envelope = np.exp(-2.0 * math.pi * d * d * (t[:, None] - m[None, :]) ** 2)
    peaks = np.exp(-((u[..., None] + 2.0 * m * SQRT_PI) ** 2) / (2.0 * d * d))
    amp = peaks @ envelope.T
    return (amp * amp).sum(axis=-1)


def _marginal_norm(d: float) -> float:
    f = lambda x: float(_unnormalized_marginal(d, np.asarray(x)))
    val, _ = integrate.quad(f, -SQRT_PI, SQRT_PI, epsabs=1e-14, epsrel=1e-12, points=[0.0], limit=200)
    return val


def double_measurement_weights(
    q1: Real, q2: Real, rp: RatePair, model: Literal["closed_form", "exact"] = "closed_form"
) -> tuple[np.ndarray, np.ndarray]:
    """Normalized probabilities that the second outcome sits on an even or odd tooth.

    ``w1 = q1 - n1*sqrt(pi)`` is the first outcome's shift (data plus one
    ancilla) and ``w2 = q2 - n2*sqrt(pi)`` the second's (data plus two
    ancillas). ``model="closed_form"`` uses a closed-form exponent;
    ``model="exact"`` uses the bivariate Gaussian density of ``(w1, w2)``.
    """
    s1sq, s2sq = rp.sigma1**2, rp.sigma2**2
    if s2sq == 0:
        raise ParameterError("double measurement needs a noisy ancilla (sigma2 > 0)")
    teeth = _teeth(rp.k)
    q1a = np.asarray(q1, dtype=float)[..., None, None]
    q2a = np.asarray(q2, dtype=float)[..., None, None]
    w1 = q1a - teeth[:, None] * SQRT_PI
    w2 = q2a - teeth[None, :] * SQRT_PI
    if model == "closed_form":
        scale = s1sq / (4.0 * s2sq * (2.0 * s2sq + 3.0 * s1sq))
        logw = -scale * (2.0 * (w1 - w2) ** 2 + 6.0 * w1**2 + 3.0 * w2**2)
    elif model == "exact":
        var1, var2, cov = s1sq + s2sq, s1sq + 2.0 * s2sq, s1sq
        det = var1 * var2 - cov * cov
        logw = -0.5 * (var2 * w1**2 - 2.0 * cov * w1 * w2 + var1 * w2**2) / det
    else:
        raise ParameterError(f"unknown model {model!r}")
    even = (teeth % 2 == 0)[None, :]
    log_even = special.logsumexp(np.where(even, logw, -np.inf), axis=(-2, -1))
    log_odd = special.logsumexp(np.where(even, -np.inf, logw), axis=(-2, -1))
    return special.expit(log_even - log_odd), special.expit(log_odd - log_even)


def double_measurement_decision(
    q1: Real, q2: Real, rp: RatePair, model: Literal["closed_form", "exact"] = "closed_form"
) -> tuple[bool | np.ndarray, Real, Real]:
    """Decide the parity of the second tooth index; ties go to even."""
    p_even, p_odd = double_measurement_weights(q1, q2, rp, model)
    parity_even = p_even >= p_odd
    if np.ndim(parity_even) == 0:
        return bool(parity_even), float(p_even), float(p_odd)
    return parity_even, p_even, p_odd
