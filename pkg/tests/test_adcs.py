import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphereclimb.adcs import (
    BODY_INERTIA,
    DEFAULT_GAINS,
    ControllerGains,
    WheelArray,
    coast,
    coupled_dynamics,
    inertial_momentum,
    pd_torque,
    saturate,
    slew_to,
    tune_gains,
)
from sphereclimb.simcore import attitude_to_euler, quat_identity

vec = st.lists(st.floats(-3.0, 3.0), min_size=3, max_size=3)


def test_default_gains_from_second_order_design():
    # J = 0.4 m r^2 = 0.027; w_n = 20, zeta = 1
    assert BODY_INERTIA == pytest.approx(0.027)
    np.testing.assert_allclose(DEFAULT_GAINS.kp, [10.8] * 3)
    np.testing.assert_allclose(DEFAULT_GAINS.kd, [1.08] * 3)


def test_tuned_gains_place_both_poles():
    g = tune_gains(0.05, natural_frequency=8.0, damping_ratio=0.7)
    poles = np.roots([0.05, g.kd[0], g.kp[0]])
    np.testing.assert_allclose(sorted(abs(poles)), [8.0, 8.0], rtol=1e-9)
    assert -poles[0].real / abs(poles[0]) == pytest.approx(0.7)


def test_gains_must_be_positive():
    with pytest.raises(ValueError):
        ControllerGains((1, 1, 0), (1, 1, 1))


def test_pd_torque_wraps_error():
    g = ControllerGains((1.0, 1.0, 1.0), (0.0 + 1e-9,) * 3)
    tau = pd_torque([math.pi - 0.1, 0, 0], [-math.pi + 0.1, 0, 0], np.zeros(3), np.zeros(3), g)
    # short way round is -0.2 rad
    assert tau[0] == pytest.approx(0.2)


@given(vec, vec, vec, vec)
def test_pd_torque_is_odd_in_the_errors(ed, ea, wd, wa):
    a = pd_torque(ed, ea, wd, wa, DEFAULT_GAINS)
    b = pd_torque(ea, ed, wa, wd, DEFAULT_GAINS)
    # wrap(-x) = -wrap(x) except at exactly pi
    np.testing.assert_allclose(a, -b, atol=1e-9)


def test_pd_torque_clamp():
    tau = pd_torque([1, -1, 0], [0, 0, 0], np.zeros(3), np.zeros(3), DEFAULT_GAINS, max_torque=0.5)
    np.testing.assert_allclose(tau, [-0.5, 0.5, 0.0])


def test_saturation_limits_and_overspeed():
    w = WheelArray(speeds=np.array([0.0, 700.0, -700.0]))
    tau, sat = saturate([2.0, 0.1, 0.1], w)
    assert sat
    np.testing.assert_allclose(tau, [0.5, 0.0, 0.1])
    tau, sat = saturate([0.1, -0.1, 0.1], w)
    assert not sat


def test_wheel_torque_reacts_on_body():
    w = WheelArray()
    wd, wsd, sat = coupled_dynamics(np.zeros(3), BODY_INERTIA, w, [0.01, 0.0, 0.0])
    assert wd[0] == pytest.approx(-0.01 / BODY_INERTIA)
    assert wsd[0] == pytest.approx(0.01 / w.inertia[0])
    assert not sat


def test_torque_free_momentum_is_conserved():
    inertia = np.array([0.027, 0.03, 0.035])
    w = WheelArray(speeds=np.array([50.0, -20.0, 80.0]))
    q0, r0 = quat_identity(), np.array([0.3, -0.8, 0.5])
    h0 = inertial_momentum(q0, r0, inertia, w)
    _, qs, rs, ws = coast(q0, r0, w, inertia, duration=10.0)
    h1 = inertial_momentum(qs[-1], rs[-1], inertia, WheelArray(speeds=ws[-1]))
    assert np.linalg.norm(h1 - h0) <= 1e-6 * np.linalg.norm(h0)
    np.testing.assert_array_equal(ws[-1], w.speeds)


def test_reference_slew_settles_with_monotone_envelope():
    res = slew_to((0.27, 0.25, 0.07), quat_identity(), np.zeros(3), WheelArray())
    assert res.settled and res.settle_time < 1.0
    np.testing.assert_allclose(attitude_to_euler(res.attitude), (0.27, 0.25, 0.07), atol=1e-3)
    norm = np.linalg.norm(res.errors, axis=1)
    assert np.all(np.diff(norm) <= 1e-12)
    # the first instants ask for more than 0.5 N m
    assert res.saturated


def test_slew_keeps_total_momentum_zero():
    res = slew_to((0.27, 0.25, 0.07), quat_identity(), np.zeros(3), WheelArray())
    h = inertial_momentum(res.attitude, res.rate, BODY_INERTIA, WheelArray(speeds=res.wheel_speed))
    assert np.linalg.norm(h) < 1e-12


def test_slew_timeout_reports_unsettled():
    res = slew_to((1.0, 0.0, 0.0), quat_identity(), np.zeros(3), WheelArray(), timeout=0.05)
    assert not res.settled
    assert res.duration == pytest.approx(0.05)
    with pytest.raises(ValueError):
        slew_to((0, 0, 0), quat_identity(), np.zeros(3), WheelArray(), timeout=0.0)


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.8, 0.8), st.floats(-0.8, 0.8), st.floats(-0.8, 0.8))
def test_slew_reaches_any_moderate_target(r, p, y):
    res = slew_to((r, p, y), quat_identity(), np.zeros(3), WheelArray())
    assert res.settled
    err = np.array(attitude_to_euler(res.attitude)) - (r, p, y)
    assert np.abs(err).max() < 1e-3
