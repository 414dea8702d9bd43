"""Interval estimates, paired tests and threshold-crossing detection."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from statsmodels.stats.contingency_tables import mcnemar
from statsmodels.stats.proportion import proportion_confint


def wilson_interval(count: int, n: int, alpha: float = 0.05) -> tuple[float, float]:
    if n < 1:
        raise ValueError("a rate needs at least one trial")
    if not 0 <= count <= n:
        raise ValueError(f"count {count} outside [0, {n}]")
    lo, hi = proportion_confint(count, n, alpha=alpha, method="wilson")
    # Guard against rounding pushing the bound past the point estimate.
    rate = count / n
    return float(min(lo, rate)), float(max(hi, rate))


def mcnemar_pvalue(a_only: int, b_only: int) -> float:
    """Exact two-sided McNemar p-value from the two discordant counts."""
    if a_only + b_only == 0:
        return 1.0
    table = [[0, a_only], [b_only, 0]]
    return float(mcnemar(table, exact=True).pvalue)


@dataclass(frozen=True)
class Crossing:
    sigma_lo: float
    sigma_hi: float
    crossed: bool


def find_crossing(sigmas: Sequence[float], rate_small: Sequence[float], rate_large: Sequence[float]) -> Crossing:
    """First grid interval where the larger lattice stops beating the smaller one.

    Below threshold a larger lattice has the lower rate; the crossing is the
    first adjacent pair where ``rate_large - rate_small`` changes sign.
    """
    sigmas = np.asarray(sigmas, dtype=float)
    if sigmas.size < 2:
        raise ValueError("need at least two grid points")
    order = np.argsort(sigmas, kind="stable")
    s = sigmas[order]
    diff = np.asarray(rate_large, dtype=float)[order] - np.asarray(rate_small, dtype=float)[order]
    for i in range(s.size):
        if diff[i] == 0 and 0 < i < s.size - 1:
            return Crossing(float(s[i]), float(s[i]), True)
        if i + 1 < s.size and diff[i] * diff[i + 1] < 0:
            return Crossing(float(s[i]), float(s[i + 1]), True)
    return Crossing(float(s[0]), float(s[-1]), False)
