import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sphereclimb.simcore import (
    MARS,
    Environment,
    GimbalLockWarning,
    IntegrationError,
    RigidBodyState,
    attitude_to_euler,
    euler_to_attitude,
    integrate_step,
    quat_identity,
    quat_multiply,
    quat_to_matrix,
    wrap_angle,
    zero_vector,
)


def gravity(g):
    return lambda t, s: np.array([0.0, 0.0, -g])


def test_free_fall_one_step():
    s = integrate_step(RigidBodyState(), gravity(3.71), zero_vector, np.ones(3), 1.0, dt=0.1)
    assert s.velocity[2] == pytest.approx(-0.371, abs=1e-12)
    assert s.position[2] == pytest.approx(-0.5 * 3.71 * 0.01, abs=1e-12)


def test_zero_forces_only_translate():
    s0 = RigidBodyState(velocity=np.array([0.3, -0.2, 0.1]), attitude=euler_to_attitude(0.1, 0.2, 0.3))
    s1 = integrate_step(s0, zero_vector, zero_vector, np.ones(3), 2.0, dt=0.01)
    np.testing.assert_allclose(s1.position, s0.velocity * 0.01, atol=1e-15)
    np.testing.assert_allclose(s1.velocity, s0.velocity, atol=1e-15)
    np.testing.assert_allclose(s1.attitude, s0.attitude, atol=1e-15)


def test_projectile_range_matches_closed_form():
    g, v, dt = 3.71, 2.0, 1e-3
    s = RigidBodyState(velocity=np.array([v / math.sqrt(2), 0.0, v / math.sqrt(2)]))
    t = 0.0
    while True:
        nxt = integrate_step(s, gravity(g), zero_vector, np.ones(3), 1.0, dt, t)
        if nxt.position[2] < 0.0:
            break
        s, t = nxt, t + dt
    # exact quadratic crossing inside the last step
    z, vz = s.position[2], s.velocity[2]
    tau = (vz + math.sqrt(vz * vz + 2 * g * z)) / g
    x = s.position[0] + s.velocity[0] * tau
    assert x == pytest.approx(v * v / g, abs=1e-6)
    assert v * v / g == pytest.approx(1.078, abs=5e-4)


def test_torque_free_spin_keeps_momentum_and_unit_quaternion():
    inertia = np.array([0.02, 0.027, 0.035])
    s = RigidBodyState(angular_velocity=np.array([0.4, 3.0, 0.2]))

    def h_world(st_):
        return quat_to_matrix(st_.attitude) @ (inertia * st_.angular_velocity)

    h0 = h_world(s)
    for k in range(10_000):
        s = integrate_step(s, zero_vector, zero_vector, inertia, 1.0, 1e-3, k * 1e-3)
        assert abs(np.linalg.norm(s.attitude) - 1.0) < 1e-9
    assert np.linalg.norm(h_world(s)) == pytest.approx(np.linalg.norm(h0), rel=1e-6)
    np.testing.assert_allclose(h_world(s), h0, rtol=0, atol=1e-6 * np.linalg.norm(h0))


def test_non_finite_force_names_the_quantity():
    bad = lambda t, s: np.array([np.nan, 0.0, 0.0])  # noqa: E731
    with pytest.raises(IntegrationError, match="velocity"):
        integrate_step(RigidBodyState(), bad, zero_vector, np.ones(3), 1.0)


def test_angular_velocity_cap():
    s = RigidBodyState(angular_velocity=np.array([2e5, 0.0, 0.0]))
    with pytest.raises(IntegrationError, match="cap"):
        integrate_step(s, zero_vector, zero_vector, np.ones(3), 1.0)


@pytest.mark.parametrize("kw", [dict(dt=0.0), dict(mass=0.0), dict(inertia=np.array([1.0, -1.0, 1.0]))])
def test_integrate_step_rejects_bad_arguments(kw):
    args = dict(inertia=np.ones(3), mass=1.0, dt=1e-3) | kw
    with pytest.raises(ValueError):
        integrate_step(RigidBodyState(), zero_vector, zero_vector, args["inertia"], args["mass"], args["dt"])


def test_identity_euler():
    np.testing.assert_array_equal(euler_to_attitude(0.0, 0.0, 0.0), quat_identity())


def test_reference_euler_round_trip():
    q = euler_to_attitude(0.27, 0.25, 0.07)
    np.testing.assert_allclose(attitude_to_euler(q), (0.27, 0.25, 0.07), atol=1e-9)


def test_half_turn_roll_is_an_involution():
    q = euler_to_attitude(math.pi, 0.0, 0.0)
    qq = quat_multiply(q, q)
    assert abs(abs(qq[0]) - 1.0) < 1e-12
    np.testing.assert_allclose(quat_to_matrix(qq), np.eye(3), atol=1e-12)


def _rz(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def _ry(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[c, 0, s], [0, 1, 0], [-s, 0, c]])


def _rx(a):
    c, s = math.cos(a), math.sin(a)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def test_euler_round_trip_on_1000_random_triples():
    rng = np.random.default_rng(7)
    lim = 0.5 * math.pi - 0.01
    for roll, pitch, yaw in zip(rng.uniform(-math.pi, math.pi, 1000), rng.uniform(-lim, lim, 1000),
                                rng.uniform(-math.pi, math.pi, 1000)):
        q = euler_to_attitude(roll, pitch, yaw)
        back = np.array(attitude_to_euler(q))
        err = wrap_angle(back - np.array([roll, pitch, yaw]))
        assert np.abs(err).max() < 1e-9


@given(st.floats(-3.1, 3.1), st.floats(-1.5, 1.5), st.floats(-3.1, 3.1))
def test_euler_matches_zyx_matrix_product(roll, pitch, yaw):
    expected = _rz(yaw) @ _ry(pitch) @ _rx(roll)
    np.testing.assert_allclose(quat_to_matrix(euler_to_attitude(roll, pitch, yaw)), expected, atol=1e-12)


def test_gimbal_lock_is_flagged_not_fatal():
    q = euler_to_attitude(0.1, 0.5 * math.pi - 0.001, 0.2)
    with pytest.warns(GimbalLockWarning):
        angles = attitude_to_euler(q)
    assert len(angles) == 3


@settings(max_examples=200)
@given(st.floats(-50.0, 50.0))
def test_wrap_angle_range(a):
    w = wrap_angle(a)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9)


def test_environment():
    assert MARS.gravity[2] == pytest.approx(-3.71)
    with pytest.raises(ValueError):
        Environment(-1.0)
    with pytest.raises(ValueError):
        Environment(1.0, (1.0, 1.0, 0.0))
