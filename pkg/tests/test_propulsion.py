import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sphereclimb.propulsion import (
    REFERENCE_HOP_EULER,
    PropellantExhaustedError,
    PropellantState,
    ThrusterSpec,
    calibrate_mars_hop,
    consume_hop,
    hop_burn_profile,
    simulate_propulsive_hop,
    thrust,
    throat_area_for,
)
from sphereclimb.simcore import euler_to_attitude

# 50-digit mpmath evaluation of the nozzle formula at k=1.2, p=1 MPa, p_e=0.1 MPa, A=1e-5 m^2
THRUST_ORACLE = 12.682880868974168459899913317380098464665492794546


def test_thrust_against_high_precision_value():
    spec = ThrusterSpec(chamber_pressure=1e6, exit_pressure=1e5, throat_area=1e-5, specific_heat_ratio=1.2)
    assert thrust(spec) == pytest.approx(THRUST_ORACLE, rel=1e-13)


def test_thrust_zero_when_no_pressure_drop():
    spec = ThrusterSpec(chamber_pressure=1e6, exit_pressure=1e6)
    assert thrust(spec) == 0.0


def test_thrust_vacuum_limit():
    k = 1.4
    spec = ThrusterSpec(chamber_pressure=1e6, exit_pressure=0.0, throat_area=1e-4, specific_heat_ratio=k)
    coeff = math.sqrt(2 * k * k / (k - 1) * (2 / (k + 1)) ** ((k + 1) / (k - 1)))
    assert thrust(spec) == pytest.approx(100.0 * coeff, rel=1e-14)


def test_exit_pressure_above_chamber_is_rejected():
    with pytest.raises(ValueError, match="radicand"):
        thrust(ThrusterSpec(chamber_pressure=1e5, exit_pressure=2e5))


@pytest.mark.parametrize("kw", [dict(specific_heat_ratio=1.0), dict(throat_area=0.0), dict(chamber_pressure=0.0),
                                dict(burn_duration=-1.0), dict(propellant_per_hop=-1e-3)])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        ThrusterSpec(**kw)


@given(st.floats(1e5, 1e7), st.floats(0.0, 0.99), st.floats(1e-7, 1e-3), st.floats(1.05, 1.7))
def test_thrust_is_linear_in_throat_area_and_monotone_in_ratio(p, ratio, area, k):
    base = ThrusterSpec(chamber_pressure=p, exit_pressure=ratio * p, throat_area=area, specific_heat_ratio=k)
    double = ThrusterSpec(chamber_pressure=p, exit_pressure=ratio * p, throat_area=2 * area, specific_heat_ratio=k)
    assert thrust(double) == pytest.approx(2 * thrust(base), rel=1e-12)
    lower = ThrusterSpec(chamber_pressure=p, exit_pressure=0.5 * ratio * p, throat_area=area, specific_heat_ratio=k)
    assert thrust(lower) >= thrust(base)


def test_throat_area_inverts_thrust():
    spec = ThrusterSpec()
    area = throat_area_for(25.0, spec)
    assert thrust(ThrusterSpec(throat_area=area)) == pytest.approx(25.0, rel=1e-12)


def test_propellant_bookkeeping_exact():
    spec = ThrusterSpec()
    state = PropellantState(0.1)
    for _ in range(20):
        state = consume_hop(state, spec)
    assert state.hops_performed == 20
    assert state.remaining_mass == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(PropellantExhaustedError):
        consume_hop(state, spec)


def test_one_hop_uses_exactly_five_grams():
    state = consume_hop(PropellantState(0.1), ThrusterSpec())
    assert 0.1 - state.remaining_mass == pytest.approx(0.005, abs=1e-15)


def test_burn_profile_shape():
    spec = ThrusterSpec()
    prof = hop_burn_profile(spec, 3.0)
    np.testing.assert_array_equal(prof(0.0), [0.0, 0.0, thrust(spec)])
    np.testing.assert_array_equal(prof(spec.burn_duration), np.zeros(3))
    assert prof.impulse == pytest.approx(thrust(spec) * spec.burn_duration)
    with pytest.raises(ValueError):
        hop_burn_profile(spec, 0.0)


def test_default_thruster_is_the_mars_calibration():
    cal = calibrate_mars_hop()
    assert cal.throat_area == pytest.approx(ThrusterSpec().throat_area, rel=1e-6)
    assert cal.burn_duration == pytest.approx(ThrusterSpec().burn_duration, rel=1e-6)


def test_reference_hop_profile():
    q = euler_to_attitude(*REFERENCE_HOP_EULER)
    hop = simulate_propulsive_hop(ThrusterSpec(), 3.0, q, 3.71)
    assert hop.apex == pytest.approx(0.28, rel=1e-5)
    assert math.hypot(*hop.landing[:2]) == pytest.approx(math.hypot(0.37, 0.41), rel=1e-6)
    assert hop.landing[2] == 0.0
    assert hop.propellant_used == 0.005


def test_hop_without_enough_thrust_stays_down():
    weak = ThrusterSpec(throat_area=1e-8)
    hop = simulate_propulsive_hop(weak, 3.0, euler_to_attitude(0, 0, 0), 3.71)
    assert hop.apex == 0.0
