import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sphereclimb.adcs import WheelArray
from sphereclimb.rwhop import (
    DEFAULT_CALIBRATION,
    REFERENCE_POINTS,
    ContactParams,
    HopCommand,
    HopPlatformSpec,
    HopPracticalityWarning,
    analytic_distance,
    contact_force,
    fig6_table,
    fig7_table,
    hop_controls,
    hop_distance,
    hop_episode,
)


@pytest.mark.parametrize("g, omega, tau", REFERENCE_POINTS)
def test_calibrated_controls_near_reference(g, omega, tau):
    cmd = hop_controls(1.0, g)
    assert cmd.omega == pytest.approx(omega, rel=0.2)
    assert cmd.torque == pytest.approx(tau, rel=0.2)


@given(st.floats(1e-3, 10.0), st.floats(0.01, 5.0), st.floats(1.1, 10.0))
def test_scaling_laws(g, d, k):
    a = hop_controls(d, g)
    b = hop_controls(k * d, g)
    c = hop_controls(d, k * g)
    assert b.omega / a.omega == pytest.approx(math.sqrt(k), rel=1e-9)
    assert c.omega / a.omega == pytest.approx(math.sqrt(k), rel=1e-9)
    assert c.torque / a.torque == pytest.approx(k, rel=1e-9)


def test_zero_distance_needs_nothing():
    cmd = hop_controls(0.0, 3.71)
    assert cmd.omega == 0.0 and cmd.torque == 0.0


def test_invalid_inputs():
    with pytest.raises(ValueError):
        hop_controls(-1.0, 3.71)
    with pytest.raises(ValueError):
        hop_controls(1.0, 0.0)
    with pytest.raises(ValueError):
        HopCommand(-1.0, 0.0)


def test_mars_wheel_hop_is_flagged_impractical():
    with pytest.warns(HopPracticalityWarning):
        hop_controls(1.0, 3.71, wheels=WheelArray())
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        hop_controls(1.0, 0.006, wheels=WheelArray())


def test_analytic_distance_round_trip():
    cmd = hop_controls(2.0, 0.006)
    # calibrated torque at Phobos is below the tipping torque, so use a strong brake
    strong = HopCommand(cmd.omega, 1.0)
    assert analytic_distance(strong, 0.006) == pytest.approx(2.0, rel=1e-12)
    assert analytic_distance(HopCommand(cmd.omega, 0.0), 0.006) == 0.0


def test_contact_force_pieces():
    p = ContactParams()
    assert np.all(contact_force(-0.01, 0.0, 0.0, p) == 0.0)
    f = contact_force(0.001, 0.0, 0.0, p)
    assert f[0] == pytest.approx(p.stiffness * 0.001)
    assert f[1] == 0.0
    f = contact_force(0.001, 0.0, 1.0, p)
    assert f[1] == pytest.approx(-p.friction * f[0])
    f = contact_force(0.0, 0.0, [0.0, -1.0], p, normal_load=2.0)
    np.testing.assert_allclose(f, [2.0, 0.0, p.friction * 2.0])


def test_brake_below_tipping_torque_gives_no_liftoff():
    spec = HopPlatformSpec()
    ep = hop_episode(HopCommand(600.0, 0.5 * spec.robot_mass * 0.006 * spec.spike_length), 0.006)
    assert ep.status == "no_liftoff" and ep.distance == 0.0


def test_phobos_reference_hop_distance():
    d = hop_distance(HopCommand(628.0, 0.33), 0.006)
    assert 3.0 <= d <= 5.0


def test_flight_energy_constant():
    spec = HopPlatformSpec()
    ep = hop_episode(HopCommand(628.0, 0.33), 0.006, spec)
    assert ep.status == "landed"
    t = np.linspace(0.0, ep.landing_time - ep.liftoff_time, 50)
    e = ep.flight_energy(t, 0.006, spec)
    assert np.ptp(e) <= 1e-6 * abs(e[0])


def test_distance_grows_with_wheel_speed():
    ds = [hop_distance(HopCommand(w, 0.33), 0.006) for w in (300.0, 450.0, 628.0)]
    assert ds[0] < ds[1] < ds[2]


def test_tables():
    rows = fig6_table([0.006, 3.71])
    assert rows[0][0] == 0.006 and len(rows) == 2
    rows = fig7_table([0.2, 0.33], [400.0, 628.0], workers=2)
    assert [r[:2] for r in rows] == [(0.2, 400.0), (0.2, 628.0), (0.33, 400.0), (0.33, 628.0)]
    assert all(r[3] in ("landed", "no_liftoff", "timeout") for r in rows)


def test_calibration_constants_are_positive():
    assert DEFAULT_CALIBRATION.efficiency > 0 and DEFAULT_CALIBRATION.torque_factor > 0
