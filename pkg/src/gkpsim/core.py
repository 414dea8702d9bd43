"""Shift-error arithmetic for GKP qubits.

A GKP qubit is represented stochastically: a point displacement ``(u, v)`` in
the two quadratures plus a classical Pauli frame that records logical
``X``/``Z`` applications. Every function here is written with numpy
operations, so the scalar fields of :class:`ShiftPair` and :class:`PauliFrame`
may equally be arrays of the same shape; this is how the Monte Carlo code
processes whole batches of qubits with the same rules.

Conventions
-----------
* ``wrap_to_fundamental`` maps onto the half-open interval
  ``[-sqrt(pi)/2, sqrt(pi)/2)``.
* CNOT: control ``(u1, v1 - v2)``, target ``(u2 + u1, v2)``.
* Steane correction in q: data ``u -> -u_anc``, ``v -> v - v_anc``; logical
  ``X`` recorded on an odd tooth.  In p: data ``v -> v_anc``,
  ``u -> u + u_anc``; logical ``Z`` recorded on an odd tooth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

SQRT_PI = math.sqrt(math.pi)
HALF_SQRT_PI = 0.5 * SQRT_PI

Real = Union[float, np.ndarray]


class ParameterError(ValueError):
    """A parameter is outside the domain an operation supports."""


class ContractError(ValueError):
    """An input violates an operation's precondition."""


def sqrt_pi() -> float:
    """Return sqrt(pi), the logical displacement of the GKP code."""
    return SQRT_PI


@dataclass(frozen=True)
class ShiftPair:
    """Residual displacement in the q (``u``) and p (``v``) quadratures."""

    u: Real = 0.0
    v: Real = 0.0


@dataclass(frozen=True)
class PauliFrame:
    """Parities of logical X and Z applications tracked in software."""

    x_count: int | np.ndarray = 0
    z_count: int | np.ndarray = 0

    def compose(self, other: PauliFrame) -> PauliFrame:
        return PauliFrame(self.x_count ^ other.x_count, self.z_count ^ other.z_count)


@dataclass(frozen=True)
class GkpQubit:
    shift: ShiftPair = field(default_factory=ShiftPair)
    frame: PauliFrame = field(default_factory=PauliFrame)

    @classmethod
    def from_shifts(cls, u: Real = 0.0, v: Real = 0.0) -> GkpQubit:
        return cls(ShiftPair(u, v))


@dataclass(frozen=True)
class ChannelParams:
    """Standard deviation of the Gaussian shift applied to each quadrature."""

    sigma: float

    def __post_init__(self) -> None:
        if not (self.sigma > 0 and math.isfinite(self.sigma)):
            raise ParameterError(f"sigma must be a positive finite number, got {self.sigma!r}")


@dataclass(frozen=True)
class SteaneObservation:
    """What the experimenter sees: the wrapped homodyne outcome."""

    q_cor: Real


@dataclass(frozen=True)
class SteaneTruth:
    """Simulation-only ground truth, never to be read by a decoder."""

    tooth: int | np.ndarray
    success: bool | np.ndarray


@dataclass(frozen=True)
class SteaneOutcomeRaw:
    observation: SteaneObservation
    truth: SteaneTruth

    @property
    def q_cor(self) -> Real:
        return self.observation.q_cor


def wrap_to_fundamental(x: Real) -> tuple[Real, int | np.ndarray]:
    """Split ``x`` into ``q_cor + n*sqrt(pi)`` with ``q_cor`` in [-sqrt(pi)/2, sqrt(pi)/2).

    Scalars give ``(float, int)``; arrays give ``(ndarray, int64 ndarray)``.
    """
    scalar = np.ndim(x) == 0
    xa = np.asarray(x, dtype=float)
    n = np.floor(xa / SQRT_PI + 0.5)
    q = xa - n * SQRT_PI
    # Values within one ulp of x from a boundary count as sitting on it, so
    # the upper edge goes to the next tooth; one step fixes any misrounding.
    tol = np.spacing(np.abs(xa))
    up = q >= HALF_SQRT_PI - tol
    down = q < -HALF_SQRT_PI - tol
    if np.any(up) or np.any(down):
        n = n + up - down
        q = xa - n * SQRT_PI
    q = np.clip(q, -HALF_SQRT_PI, np.nextafter(HALF_SQRT_PI, 0.0))
    n = n.astype(np.int64)
    if scalar:
        return float(q), int(n)
    return q, n


def apply_gaussian_channel(
    q: GkpQubit, params: ChannelParams, rng: np.random.Generator
) -> GkpQubit:
    """Displace both quadratures by independent N(0, sigma^2) draws (u first, then v)."""
    shape = np.shape(q.shift.u)
    size = shape if shape else None
    du = rng.normal(0.0, params.sigma, size=size)
    dv = rng.normal(0.0, params.sigma, size=size)
    return replace(q, shift=ShiftPair(q.shift.u + du, q.shift.v + dv))


def cnot_propagate(control: GkpQubit, target: GkpQubit) -> tuple[GkpQubit, GkpQubit]:
    """Propagate shifts and Pauli frames through a logical CNOT."""
    c, t = control.shift, target.shift
    new_control = GkpQubit(
        ShiftPair(c.u, c.v - t.v),
        PauliFrame(control.frame.x_count, control.frame.z_count ^ target.frame.z_count),
    )
    new_target = GkpQubit(
        ShiftPair(t.u + c.u, t.v),
        PauliFrame(target.frame.x_count ^ control.frame.x_count, target.frame.z_count),
    )
    return new_control, new_target


def _as_shift(ancilla: ShiftPair | Real) -> ShiftPair:
    if isinstance(ancilla, ShiftPair):
        return ancilla
    return ShiftPair(ancilla, 0.0)


def steane_correct_q(
    data: GkpQubit, ancilla: ShiftPair | Real = 0.0
) -> tuple[GkpQubit, SteaneOutcomeRaw]:
    """Steane error correction of the q quadrature with a |+> ancilla.

    ``ancilla`` is the ancilla's shift; a bare number is taken as its q-shift
    with no p-shift. The returned qubit carries residual ``u = -u_anc`` and a
    logical X recorded in its frame iff the measured tooth is odd.
    """
    anc = _as_shift(ancilla)
    u1, v1 = data.shift.u, data.shift.v
    w = u1 + anc.u
    q_cor, n = wrap_to_fundamental(w)
    odd = n & 1
    new = GkpQubit(
        ShiftPair(u1 - q_cor - n * SQRT_PI, v1 - anc.v),
        PauliFrame(data.frame.x_count ^ odd, data.frame.z_count),
    )
    return new, SteaneOutcomeRaw(SteaneObservation(q_cor), SteaneTruth(n, odd == 0))


def steane_correct_p(
    data: GkpQubit, ancilla: ShiftPair | Real = 0.0
) -> tuple[GkpQubit, SteaneOutcomeRaw]:
    """Steane error correction of the p quadrature with a |0> ancilla.

    A bare number for ``ancilla`` is its p-shift. Residual ``v = v_anc``, the
    ancilla's q-shift is added to ``u``, and a logical Z is recorded on an odd
    tooth of ``v_anc - v``.
    """
    anc = ancilla if isinstance(ancilla, ShiftPair) else ShiftPair(0.0, ancilla)
    u1, v1 = data.shift.u, data.shift.v
    w = anc.v - v1
    p_cor, n = wrap_to_fundamental(w)
    odd = n & 1
    new = GkpQubit(
        ShiftPair(u1 + anc.u, v1 + p_cor + n * SQRT_PI),
        PauliFrame(data.frame.x_count, data.frame.z_count ^ odd),
    )
    return new, SteaneOutcomeRaw(SteaneObservation(p_cor), SteaneTruth(n, odd == 0))


def canonicalize(q: GkpQubit) -> GkpQubit:
    """Wrap both shifts into the fundamental interval, moving odd teeth into the frame."""
    u, nu = wrap_to_fundamental(q.shift.u)
    v, nv = wrap_to_fundamental(q.shift.v)
    return GkpQubit(
        ShiftPair(u, v),
        PauliFrame(q.frame.x_count ^ (nu & 1), q.frame.z_count ^ (nv & 1)),
    )
