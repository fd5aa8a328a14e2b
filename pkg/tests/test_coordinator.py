import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sphereclimb.coordinator import (
    PROPULSIVE,
    REACTION_WHEEL,
    ClimbAbortedError,
    ClimbError,
    ClimbPlan,
    ClimbSetup,
    ClimbState,
    InfeasibleHopModeError,
    RobotMode,
    SystemSlipError,
    burn_attitude,
    burn_solution,
    execute_hop_step,
    hop_mode_select,
    instantaneous_center,
    run_climb,
)
from sphereclimb.grip import GripModel
from sphereclimb.propulsion import PropellantExhaustedError
from sphereclimb.simcore import PHOBOS, euler_to_attitude, quat_rotate

SURE = GripModel(p_grip=1.0)


def test_instantaneous_center_is_the_mean():
    np.testing.assert_allclose(instantaneous_center([(1, 1, 0), (1, 0, 0), (0, 1, 0), (0, 0, 0)]), [0.5, 0.5, 0])
    with pytest.raises(ValueError):
        instantaneous_center([(0, 0, 0)])


def test_hop_mode_selection():
    assert hop_mode_select(3.71) == PROPULSIVE
    assert hop_mode_select(PHOBOS.gravity_magnitude) == REACTION_WHEEL
    assert hop_mode_select(PHOBOS.gravity_magnitude, PROPULSIVE) == PROPULSIVE
    with pytest.raises(InfeasibleHopModeError):
        hop_mode_select(3.71, REACTION_WHEEL)
    with pytest.raises(ValueError):
        hop_mode_select(3.71, "teleport")


@given(st.floats(-0.3, 0.3), st.floats(0.2, 1.2), st.floats(0.3, 1.5))
def test_burn_solution_closes_the_kinematics(dx, dy, tf):
    g = np.array([0.0, -2.38, -2.84])
    delta = np.array([dx, dy, 0.0])
    u, tb = burn_solution(delta, g, 10.0, tf)
    total = tb + tf
    reached = 10.0 * u * (0.5 * tb * tb + tb * tf) + 0.5 * g * total * total
    np.testing.assert_allclose(reached, delta, atol=1e-9)
    assert np.linalg.norm(u) == pytest.approx(1.0)


@given(st.floats(-1, 1), st.floats(-1, 1), st.floats(0.05, 1))
def test_burn_attitude_points_body_z(x, y, z):
    u = np.array([x, y, z]) / np.linalg.norm([x, y, z])
    q = euler_to_attitude(*burn_attitude(u))
    np.testing.assert_allclose(quat_rotate(q, [0, 0, 1.0]), u, atol=1e-12)


@pytest.mark.parametrize("kw", [dict(order=(1, 2, 3)), dict(order=(1, 1, 2, 3)), dict(cycles=-1), dict(hop_distance=-0.1)])
def test_plan_validation(kw):
    with pytest.raises(ValueError):
        ClimbPlan(**kw)


@pytest.mark.parametrize("kw", [dict(gravity=0.0), dict(hop_mode="walk"), dict(initial_positions=((0, 0, 0),))])
def test_setup_validation(kw):
    with pytest.raises(ValueError):
        ClimbSetup(**kw)


def test_setup_loads():
    s = ClimbSetup()
    assert s.system_mass == pytest.approx(12.6)
    assert s.slope_load == pytest.approx(12.6 * 3.71 * math.sin(math.radians(40)))


def test_nominal_cycle_outcome(nominal_cycle):
    state, record, events = nominal_cycle
    assert [h["robot"] for h in state.hop_log] == [1, 2, 3, 4]
    assert all(h["retries"] == 0 for h in state.hop_log)
    for h in state.hop_log:
        assert np.linalg.norm((h["landing"] - h["target"])[:2]) < 1e-4
    assert state.propellant_used == pytest.approx(0.02, abs=1e-12)
    assert all(m == RobotMode.ANCHORED for m in state.modes)
    assert sum(e.kind == "grip_engaged" for e in events) == 4
    assert events[-1].kind == "finish"


def test_anchored_robots_do_not_move(nominal_cycle):
    state, record, _ = nominal_cycle
    pos = np.array(record.positions)
    t = np.array(record.times)
    for h in state.hop_log:
        window = (t >= h["start"]) & (t <= h["end"])
        others = [j for j in range(4) if j != h["robot"] - 1]
        moved = np.abs(pos[window][:, others] - pos[window][0, others]).max()
        assert moved < 1e-12


def test_record_sampling_is_uniform(nominal_cycle):
    _, record, _ = nominal_cycle
    t = np.array(record.times)
    np.testing.assert_allclose(np.diff(t), 0.01, atol=1e-9)
    for key in ("positions", "attitudes", "rates", "modes", "spines", "propellant", "centers", "tensions"):
        assert len(getattr(record, key)) == len(t)
    np.testing.assert_allclose(record.centers, np.array(record.positions).mean(axis=1), atol=1e-12)


def test_zero_distance_hop_is_a_noop():
    state = ClimbState(ClimbSetup(grip=SURE, initial_settle=0.0))
    before = state.pos.copy()
    _, events = execute_hop_step(state, 2, ClimbPlan(hop_distance=0.0))
    assert [e.kind for e in events] == ["noop_hop"]
    np.testing.assert_array_equal(state.pos, before)


def test_hop_needs_everyone_anchored():
    state = ClimbState(ClimbSetup(grip=SURE, initial_settle=0.0))
    state.set_mode(0, RobotMode.SLIPPING)
    with pytest.raises(ClimbError):
        execute_hop_step(state, 2, ClimbPlan())


def test_retries_exhausted_aborts_with_partial_state():
    setup = ClimbSetup(grip=SURE, forced_failures=((1, 1),))
    with pytest.raises(ClimbAbortedError) as info:
        run_climb(ClimbPlan(max_retries=0), setup)
    assert info.value.state is not None and info.value.state.failures == 1
    assert any(e.kind == "climb_aborted" for e in info.value.state.events)


def test_weak_anchors_give_system_slip():
    # six spines per robot are needed on the default face; five cannot hold with one robot loose
    setup = ClimbSetup(grip=GripModel(p_grip=1.0, spine_count=5), forced_failures=((1, 1),))
    with pytest.raises(SystemSlipError) as info:
        run_climb(ClimbPlan(), setup)
    assert any(e.kind == "system_slip" for e in info.value.state.events)


def test_propellant_runs_out():
    with pytest.raises(PropellantExhaustedError):
        run_climb(ClimbPlan(), ClimbSetup(grip=SURE, propellant_mass=0.004))


def test_phobos_climb_uses_wheels_and_no_propellant():
    setup = ClimbSetup(gravity=PHOBOS.gravity_magnitude, grip=SURE)
    state, _, events = run_climb(ClimbPlan(), setup)
    assert state.hop_mode == REACTION_WHEEL
    assert state.propellant_used == 0.0
    assert state.center[1] - 0.5 == pytest.approx(0.75, rel=0.05)


def test_seed_override_changes_the_draws():
    setup = ClimbSetup(grip=GripModel(p_grip=0.6))
    a = run_climb(ClimbPlan(), setup, seed=1)[0].failures
    b = run_climb(ClimbPlan(), setup, seed=1)[0].failures
    assert a == b


def test_second_cycle_repeats_the_first(nominal_two_cycles):
    state, _, _ = nominal_two_cycles
    assert state.center[1] - 0.5 == pytest.approx(1.5, abs=1e-4)
    assert state.propellant_used == pytest.approx(0.04, abs=1e-12)


def test_slip_arrest_logged(failure_two_cycles):
    state, _, events = failure_two_cycles
    kinds = [e.kind for e in events]
    assert kinds.count("grip_failure") == 1
    assert kinds.count("tether_arrest") == 1
    assert state.hop_log[4]["robot"] == 1 and state.hop_log[4]["retries"] == 1
