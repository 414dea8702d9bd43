"""Three-qubit bit-flip code on top of GKP qubits.

Each of the three GKP qubits passes a Gaussian shift channel and a
perfect-ancilla Steane round. The Steane outcome gives a per-qubit flip
probability, which the likelihood decoder uses; the majority decoder ignores
it and assumes at most one flip.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Sequence

import numpy as np

from gkpsim.analytics import RatePair, conditional_error
from gkpsim.core import ParameterError, wrap_to_fundamental

RATE_FLOOR = 1e-12

# Weight-<=1 pattern for each syndrome (m1 = Z1Z2, m2 = Z2Z3; True means -1).
_SINGLE = {
    (False, False): (False, False, False),
    (True, False): (True, False, False),
    (True, True): (False, True, False),
    (False, True): (False, False, True),
}


@dataclass(frozen=True)
class Syndrome2:
    m1: int
    m2: int

    def __post_init__(self) -> None:
        if self.m1 not in (1, -1) or self.m2 not in (1, -1):
            raise ParameterError("syndrome outcomes must be +1 or -1")

    @property
    def bits(self) -> tuple[bool, bool]:
        return self.m1 == -1, self.m2 == -1


@dataclass(frozen=True)
class RepetitionState:
    flips: tuple[bool, bool, bool]
    rates: tuple[float, float, float]


def clamp_rates(rates) -> np.ndarray:
    return np.clip(np.asarray(rates, dtype=float), RATE_FLOOR, 1.0 - RATE_FLOOR)


def extract_syndrome(flips: Sequence[bool]) -> Syndrome2:
    f1, f2, f3 = (bool(f) for f in flips)
    return Syndrome2(-1 if f1 ^ f2 else 1, -1 if f2 ^ f3 else 1)


def decode_majority(s: Syndrome2) -> tuple[bool, bool, bool]:
    return _SINGLE[s.bits]


def decode_ml(s: Syndrome2, rates: Sequence[float]) -> tuple[bool, bool, bool]:
    """Pick the likelier of the two syndrome-consistent patterns; ties go to the lighter one."""
    p = clamp_rates(rates)
    light = np.array(_SINGLE[s.bits])
    heavy = ~light
    log_odds = np.log(p) - np.log1p(-p)
    # Log-likelihood ratio heavy vs light: sum over positions where they differ.
    llr = float(np.sum(np.where(heavy, log_odds, -log_odds)))
    chosen = heavy if llr > 0 else light
    return tuple(bool(b) for b in chosen)


def run_repetition_trial(
    sigma: float, rng: np.random.Generator, mode: Literal["ml", "average"] = "ml"
) -> bool:
    """One encoded round; returns True on a logical error."""
    if not sigma > 0:
        raise ParameterError(f"sigma must be positive, got {sigma!r}")
    shifts = rng.normal(0.0, sigma, size=3)
    ml_err, avg_err = repetition_batch(shifts[None, :], sigma)
    return bool(ml_err[0] if mode == "ml" else avg_err[0])


def repetition_batch(shifts: np.ndarray, sigma: float, k: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Logical-error flags for both decoders on the same ``(n, 3)`` shift draws."""
    q_cor, teeth = wrap_to_fundamental(shifts)
    flips = (teeth & 1).astype(bool)
    rates = clamp_rates(conditional_error(q_cor, RatePair(sigma, 0.0, k)))
    s1 = flips[:, 0] ^ flips[:, 1]
    s2 = flips[:, 1] ^ flips[:, 2]
    # Lighter correction per syndrome, vectorized version of _SINGLE.
    light = np.stack([s1 & ~s2, s1 & s2, ~s1 & s2], axis=1)
    log_odds = np.log(rates) - np.log1p(-rates)
    llr = np.sum(np.where(light, -log_odds, log_odds), axis=1)
    ml_corr = np.where((llr > 0)[:, None], ~light, light)
    ml_err = np.bitwise_xor.reduce(ml_corr ^ flips, axis=1)
    avg_err = np.bitwise_xor.reduce(light ^ flips, axis=1)
    return ml_err, avg_err
