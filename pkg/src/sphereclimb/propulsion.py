"""Rocket thrust and per-hop propellant accounting."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np


class PropellantExhaustedError(RuntimeError):
    pass


@dataclass(frozen=True)
class ThrusterSpec:
    """Rocket motor parameters.

    Defaults are the Mars hop calibration (see :func:`calibrate_mars_hop`):
    a 2 MPa chamber expanding to 20 kPa with k = 1.2; throat area and burn
    duration put a 3 kg robot on a 0.28 m apex landing 0.55 m away under
    Mars gravity (31.45 N for 0.187 s).
    """

    chamber_pressure: float = 2.0e6
    throat_area: float = 9.5625043e-06
    exit_pressure: float = 2.0e4
    specific_heat_ratio: float = 1.2
    burn_duration: float = 0.18682874
    propellant_per_hop: float = 0.005

    def __post_init__(self):
        # p_e > p is reported by thrust(), where the radicand goes negative
        if self.exit_pressure < 0.0 or not self.chamber_pressure > 0.0:
            raise ValueError("pressures must be positive")
        if not self.throat_area > 0.0:
            raise ValueError("throat_area must be > 0")
        if not self.specific_heat_ratio > 1.0:
            raise ValueError("specific_heat_ratio must be > 1")
        if self.burn_duration < 0.0:
            raise ValueError("burn_duration must be >= 0")
        if self.propellant_per_hop < 0.0:
            raise ValueError("propellant_per_hop must be >= 0")


def thrust(spec: ThrusterSpec) -> float:
    """Ideal nozzle thrust from chamber pressure, throat area and pressure ratio.

    ``F = A_th p sqrt(2k^2/(k-1) (2/(k+1))^((k+1)/(k-1)) [1 - (p_e/p)^((k-1)/k)])``
    """
    p, pe, k = spec.chamber_pressure, spec.exit_pressure, spec.specific_heat_ratio
    if pe > p:
        raise ValueError(f"exit pressure {pe} exceeds chamber pressure {p}: negative radicand")
    bracket = 1.0 - (pe / p) ** ((k - 1.0) / k)
    coeff = 2.0 * k * k / (k - 1.0) * (2.0 / (k + 1.0)) ** ((k + 1.0) / (k - 1.0))
    return spec.throat_area * p * math.sqrt(coeff * bracket)


def throat_area_for(force: float, spec: ThrusterSpec) -> float:
    """Throat area that makes :func:`thrust` return ``force`` for ``spec``'s pressures."""
    unit = thrust(replace(spec, throat_area=1.0))
    return force / unit


@dataclass(frozen=True)
class PropellantState:
    remaining_mass: float
    hops_performed: int = 0

    def __post_init__(self):
        if self.remaining_mass < 0.0:
            raise ValueError("remaining_mass must be >= 0")


def consume_hop(state: PropellantState, spec: ThrusterSpec) -> PropellantState:
    need = spec.propellant_per_hop
    # tolerate round-off from repeated subtraction of the same per-hop mass
    if state.remaining_mass < need - 1e-12:
        raise PropellantExhaustedError(
            f"{state.remaining_mass * 1e3:.3f} g left, hop needs {need * 1e3:.3f} g"
        )
    return PropellantState(max(0.0, state.remaining_mass - need), state.hops_performed + 1)


def hop_burn_profile(spec: ThrusterSpec, robot_mass: float) -> Callable[[float], np.ndarray]:
    """Body-frame thrust as a function of time since ignition.

    Constant ``thrust(spec)`` along body +z for ``burn_duration`` seconds.
    """
    if not robot_mass > 0.0:
        raise ValueError("robot_mass must be > 0")
    force = thrust(spec) if spec.burn_duration > 0.0 else 0.0
    t_end = spec.burn_duration

    def profile(t: float) -> np.ndarray:
        if 0.0 <= t < t_end:
            return np.array([0.0, 0.0, force])
        return np.zeros(3)

    profile.force = force
    profile.duration = t_end
    profile.impulse = force * t_end
    return profile


# ---------------------------------------------------------------------------
# Single-robot propulsive hop (flat ground, attitude fixed during flight)
# ---------------------------------------------------------------------------

REFERENCE_HOP_EULER = (0.27, 0.25, 0.07)  # rad, roll/pitch/yaw of the calibrated Mars hop
REFERENCE_HOP_APEX = 0.28  # m
REFERENCE_HOP_LATERAL = (0.37, 0.41)  # m along x and y


@dataclass
class HopResult:
    times: np.ndarray
    positions: np.ndarray
    velocities: np.ndarray
    apex: float
    landing: np.ndarray
    flight_time: float
    propellant_used: float


def simulate_propulsive_hop(
    spec: ThrusterSpec,
    robot_mass: float,
    attitude: np.ndarray,
    gravity: float,
    dt: float = 1e-3,
    max_time: float = 30.0,
) -> HopResult:
    """Burn along body +z from rest at the origin, coast, and land back on z = 0.

    The attitude is held constant (no torques act during flight). Steps are cut
    at burn cut-off and at touchdown so both events are resolved exactly.
    """
    from .simcore import RigidBodyState, integrate_step, quat_rotate, zero_vector

    profile = hop_burn_profile(spec, robot_mass)
    g_vec = np.array([0.0, 0.0, -gravity])
    thrust_world = quat_rotate(attitude, np.array([0.0, 0.0, profile.force]))

    burning = [True]

    # steps are cut at burn-out, so thrust is constant across every RK stage of a step
    def force(t, s):
        f = robot_mass * g_vec
        if burning[0]:
            f = f + thrust_world
        return f

    inertia = np.ones(3)
    state = RigidBodyState(attitude=np.asarray(attitude, dtype=float))
    t = 0.0
    times, pos, vel = [0.0], [state.position.copy()], [state.velocity.copy()]
    lifted = False
    while t < max_time:
        h = dt
        burning[0] = t < profile.duration - 1e-12
        if burning[0]:
            h = min(h, profile.duration - t)
        nxt = integrate_step(state, force, zero_vector, inertia, robot_mass, h, t)
        if nxt.position[2] > 0.0:
            lifted = True
        if lifted and nxt.position[2] <= 0.0:
            # touchdown inside this step: acceleration is constant after burn-out,
            # so the crossing time is a root of the local quadratic
            a = force(t, state)[2] / robot_mass
            z0, vz = state.position[2], state.velocity[2]
            tau = _first_root(0.5 * a, vz, z0, h)
            nxt = integrate_step(state, force, zero_vector, inertia, robot_mass, tau, t)
            nxt.position[2] = 0.0
            t += tau
            state = nxt
            times.append(t)
            pos.append(state.position.copy())
            vel.append(state.velocity.copy())
            break
        if not lifted and t > profile.duration:
            break  # thrust never overcame gravity
        t += h
        state = nxt
        times.append(t)
        pos.append(state.position.copy())
        vel.append(state.velocity.copy())
    positions = np.array(pos)
    return HopResult(
        times=np.array(times),
        positions=positions,
        velocities=np.array(vel),
        apex=float(positions[:, 2].max()),
        landing=positions[-1].copy(),
        flight_time=t,
        propellant_used=spec.propellant_per_hop,
    )


def _first_root(a: float, b: float, c: float, h: float) -> float:
    """Smallest root of a t^2 + b t + c in (0, h]; falls back to h."""
    if abs(a) < 1e-300:
        return min(h, -c / b) if b != 0.0 else h
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return h
    sq = math.sqrt(disc)
    # numerically stable pair
    q = -0.5 * (b + math.copysign(sq, b))
    roots = [r for r in (q / a, c / q if q != 0.0 else math.inf) if 0.0 < r <= h * (1 + 1e-9)]
    return min(roots) if roots else h


def _closed_form_hop(accel: float, burn: float, direction: np.ndarray, g: float):
    a = accel * direction + np.array([0.0, 0.0, -g])
    vb = a * burn
    pb = 0.5 * a * burn * burn
    tf = (vb[2] + math.sqrt(vb[2] ** 2 + 2.0 * g * pb[2])) / g
    apex = pb[2] + vb[2] ** 2 / (2.0 * g)
    landing = pb + vb * tf + 0.5 * np.array([0.0, 0.0, -g]) * tf * tf
    return apex, landing


def calibrate_mars_hop(
    robot_mass: float = 3.0,
    gravity: float = 3.71,
    euler=REFERENCE_HOP_EULER,
    apex: float = REFERENCE_HOP_APEX,
    lateral: float = math.hypot(*REFERENCE_HOP_LATERAL),
    base: ThrusterSpec | None = None,
) -> ThrusterSpec:
    """Choose (thrust, burn duration) so the hop reaches ``apex`` and lands ``lateral`` away.

    Thrust is realised through the throat area at ``base``'s pressures.
    """
    from scipy.optimize import fsolve

    from .simcore import euler_to_attitude, quat_rotate

    base = base or ThrusterSpec()
    u = quat_rotate(euler_to_attitude(*euler), np.array([0.0, 0.0, 1.0]))

    def residual(x):
        acc, burn = x
        h, land = _closed_form_hop(acc, burn, u, gravity)
        return [h - apex, math.hypot(land[0], land[1]) - lateral]

    acc, burn = fsolve(residual, [4.0 * gravity, 0.15], xtol=1e-13)
    force = acc * robot_mass
    return replace(base, throat_area=throat_area_for(force, base), burn_duration=float(burn))
