import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from gkpsim.core import (
    HALF_SQRT_PI,
    SQRT_PI,
    ChannelParams,
    GkpQubit,
    ParameterError,
    PauliFrame,
    ShiftPair,
    apply_gaussian_channel,
    canonicalize,
    cnot_propagate,
    sqrt_pi,
    steane_correct_p,
    steane_correct_q,
    wrap_to_fundamental,
)

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)


def test_sqrt_pi_constant():
    assert sqrt_pi() == 1.7724538509055159
    assert sqrt_pi() ** 2 == pytest.approx(math.pi, rel=4e-16)


def test_wrap_examples():
    q, n = wrap_to_fundamental(0.9 * SQRT_PI)
    assert n == 1 and q == pytest.approx(-0.1 * SQRT_PI, abs=1e-15)
    assert wrap_to_fundamental(-SQRT_PI / 2) == (-SQRT_PI / 2, 0)
    q, n = wrap_to_fundamental(2.5 * SQRT_PI)
    assert n == 3 and q == pytest.approx(-0.5 * SQRT_PI, abs=1e-15)
    assert q >= -HALF_SQRT_PI


def test_wrap_upper_boundary_goes_to_next_tooth():
    q, n = wrap_to_fundamental(HALF_SQRT_PI)
    assert n == 1 and q == -HALF_SQRT_PI


@settings(max_examples=500)
@given(finite)
def test_wrap_identity(x):
    q, n = wrap_to_fundamental(x)
    assert -HALF_SQRT_PI <= q < HALF_SQRT_PI
    assert abs(q + n * SQRT_PI - x) <= 2 * np.spacing(max(abs(x), SQRT_PI))


def test_wrap_vectorized_matches_scalar():
    xs = np.random.default_rng(3).normal(0, 10, 1000)
    qa, na = wrap_to_fundamental(xs)
    for x, q, n in zip(xs[:50], qa[:50], na[:50]):
        assert wrap_to_fundamental(float(x)) == (q, n)
    assert na.dtype == np.int64


def test_channel_small_sigma_leaves_shift():
    rng = np.random.default_rng(0)
    q = apply_gaussian_channel(GkpQubit.from_shifts(0.3, -0.2), ChannelParams(1e-300), rng)
    assert q.shift.u == pytest.approx(0.3) and q.shift.v == pytest.approx(-0.2)


def test_channel_rejects_bad_sigma():
    for bad in (0.0, -1.0, float("nan"), float("inf")):
        with pytest.raises(ParameterError):
            ChannelParams(bad)


def test_channel_moments():
    rng = np.random.default_rng(20171207)
    q = apply_gaussian_channel(GkpQubit.from_shifts(np.zeros(10**6), np.zeros(10**6)), ChannelParams(0.6), rng)
    assert abs(q.shift.u.mean()) < 0.002
    assert abs(q.shift.u.std() - 0.6) < 0.002


def test_channel_is_deterministic():
    def run():
        rng = np.random.default_rng(42)
        return apply_gaussian_channel(GkpQubit.from_shifts(np.zeros(100), np.zeros(100)), ChannelParams(0.5), rng)

    a, b = run(), run()
    assert a.shift.u.tobytes() == b.shift.u.tobytes()
    assert a.shift.v.tobytes() == b.shift.v.tobytes()


def test_channel_composition_ks():
    n = 10**5
    rng = np.random.default_rng(7)
    zero = GkpQubit.from_shifts(np.zeros(n), np.zeros(n))
    twice = apply_gaussian_channel(apply_gaussian_channel(zero, ChannelParams(0.3), rng), ChannelParams(0.4), rng)
    once = apply_gaussian_channel(zero, ChannelParams(0.5), rng)
    assert stats.ks_2samp(twice.shift.u, once.shift.u).pvalue > 1e-3
    assert stats.ks_2samp(twice.shift.v, once.shift.v).pvalue > 1e-3


def test_cnot_examples():
    c, t = cnot_propagate(GkpQubit.from_shifts(0.3, 0), GkpQubit.from_shifts(0, 0))
    assert (c.shift, t.shift) == (ShiftPair(0.3, 0), ShiftPair(0.3, 0))
    c, t = cnot_propagate(GkpQubit.from_shifts(0, 0.2), GkpQubit.from_shifts(0, 0.5))
    assert c.shift.v == pytest.approx(-0.3) and t.shift == ShiftPair(0, 0.5)
    c, t = cnot_propagate(GkpQubit(), GkpQubit())
    assert c == GkpQubit() and t == GkpQubit()


def test_cnot_frames():
    c, t = cnot_propagate(GkpQubit(frame=PauliFrame(1, 0)), GkpQubit())
    assert t.frame == PauliFrame(1, 0) and c.frame == PauliFrame(1, 0)
    c, t = cnot_propagate(GkpQubit(), GkpQubit(frame=PauliFrame(0, 1)))
    assert c.frame == PauliFrame(0, 1) and t.frame == PauliFrame(0, 1)


@given(finite, finite, finite, finite)
def test_cnot_conserves_control_u_and_target_v(u1, v1, u2, v2):
    c, t = cnot_propagate(GkpQubit.from_shifts(u1, v1), GkpQubit.from_shifts(u2, v2))
    assert c.shift.u == u1 and t.shift.v == v2


def test_frame_compose_xors():
    assert PauliFrame(1, 0).compose(PauliFrame(1, 1)) == PauliFrame(0, 1)


def test_steane_q_examples():
    q, out = steane_correct_q(GkpQubit.from_shifts(0.3, 0.0), 0.0)
    assert out.q_cor == pytest.approx(0.3) and q.shift.u == pytest.approx(0.0, abs=1e-15)
    assert q.frame.x_count == 0 and out.truth.success

    q, out = steane_correct_q(GkpQubit.from_shifts(0.6 * SQRT_PI, 0.0), 0.0)
    assert q.frame.x_count == 1 and q.shift.u == pytest.approx(0.0, abs=1e-15)
    assert not out.truth.success and out.truth.tooth == 1

    q, out = steane_correct_q(GkpQubit.from_shifts(0.4, 0.0), 0.1)
    assert out.q_cor == pytest.approx(0.5) and q.shift.u == pytest.approx(-0.1)


def test_steane_q_moves_ancilla_p_shift():
    q, _ = steane_correct_q(GkpQubit.from_shifts(0.1, 0.2), ShiftPair(0.05, 0.07))
    assert q.shift.v == pytest.approx(0.2 - 0.07)


def test_steane_p_examples():
    q, _ = steane_correct_p(GkpQubit.from_shifts(0.0, 0.3), 0.0)
    assert q.shift.v == pytest.approx(0.0, abs=1e-15) and q.frame.z_count == 0
    q, _ = steane_correct_p(GkpQubit.from_shifts(0.0, 0.6 * SQRT_PI), 0.0)
    assert q.frame.z_count == 1
    q, _ = steane_correct_p(GkpQubit.from_shifts(0.25, 0.0), ShiftPair(0.1, 0.0))
    assert q.shift.u == pytest.approx(0.35)


def test_outcome_views_are_separate():
    _, out = steane_correct_q(GkpQubit.from_shifts(0.2, 0.0), 0.0)
    assert not hasattr(out.observation, "tooth")
    assert not hasattr(out.truth, "q_cor")


def test_canonicalize_examples():
    c = canonicalize(GkpQubit.from_shifts(SQRT_PI, 0.0))
    assert c.shift.u == pytest.approx(0.0, abs=1e-15) and c.frame.x_count == 1
    c = canonicalize(GkpQubit.from_shifts(2 * SQRT_PI, 0.0))
    assert c.shift.u == pytest.approx(0.0, abs=1e-15) and c.frame.x_count == 0
    c = canonicalize(GkpQubit.from_shifts(0.0, 3 * SQRT_PI + 0.1))
    assert c.shift.v == pytest.approx(0.1) and c.frame.z_count == 1


@given(finite, finite, st.integers(0, 1), st.integers(0, 1))
def test_canonicalize_idempotent(u, v, x, z):
    once = canonicalize(GkpQubit(ShiftPair(u, v), PauliFrame(x, z)))
    assert canonicalize(once) == once


def _bounded(rng, size, bound):
    # Half uniform draws, half pushed to the edges of the allowed interval.
    x = rng.uniform(-bound, bound, size)
    edge = rng.random(size) < 0.5
    return np.where(edge, np.sign(x) * bound, x)


def test_small_shifts_never_cause_logical_errors():
    rng = np.random.default_rng(1)
    bound = SQRT_PI / 6 - 1e-9
    batch, rounds = 2000, 500  # 10**6 Steane rounds
    q = GkpQubit.from_shifts(_bounded(rng, batch, bound), _bounded(rng, batch, bound))
    for r in range(rounds):
        anc = ShiftPair(_bounded(rng, batch, bound), _bounded(rng, batch, bound))
        step = steane_correct_q if r % 2 == 0 else steane_correct_p
        q, out = step(q, anc)
        assert np.all(out.truth.success)
    assert not np.any(q.frame.x_count) and not np.any(q.frame.z_count)
