"""Propellant-free hops made by braking a spinning reaction wheel.

A wheel is spun up slowly while the robot rests on two of its spikes, then
braked at constant torque. The reaction tips the body over a grounded spike
tip and throws it into a ballistic arc.

Two routes are provided:

* :func:`hop_controls` is the analytic pivot-launch model. All of the wheel's
  angular momentum goes into rotation about the spike tip and the body leaves
  at 45 degrees, so ``d = v^2 / g`` and
  ``omega = eta (J_B + m l^2) / (l I_w) sqrt(g d)``.
  The brake torque is ``tau = c_tau m g d``. While the brake acts, the body
  turns through ``(I_w omega)^2 / (2 tau J_pivot)``, which grows like
  ``d / tau``. Scaling the torque with ``d`` therefore keeps the launch angle
  the same for every hop length. The constants ``eta`` and ``c_tau`` are
  fitted once to two reference 1 m operating points.
* :func:`hop_distance` runs a planar contact simulation of the full episode.
  Phases are brake, pivot, lift-off and flight. The hop ends when the centre
  comes back down to its two-spike resting height.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from numba import njit

from .adcs import BODY_INERTIA, ROBOT_MASS, WHEEL_MASS, WHEEL_RADIUS, WheelArray

# Reference (g, omega, tau) for a 1 m hop; Phobos-like and Mars surface gravity.
REFERENCE_POINTS = ((0.006, 314.0, 0.063), (3.71, 7952.0, 38.8))

NOMINAL, NO_LIFTOFF, TIMEOUT = 0, 1, 2
STATUS_NAMES = {NOMINAL: "landed", NO_LIFTOFF: "no_liftoff", TIMEOUT: "timeout"}


class HopPracticalityWarning(UserWarning):
    """Commanded wheel speed or torque is beyond what the wheel hardware can do."""


@dataclass(frozen=True)
class HopPlatformSpec:
    wheel_mass: float = WHEEL_MASS
    wheel_radius: float = WHEEL_RADIUS
    spike_length: float = 0.25  # m, centre to spike tip
    robot_mass: float = ROBOT_MASS
    body_inertia: float = BODY_INERTIA

    def __post_init__(self):
        for name in ("wheel_mass", "wheel_radius", "spike_length", "robot_mass", "body_inertia"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")

    @property
    def wheel_inertia(self) -> float:
        return 0.5 * self.wheel_mass * self.wheel_radius**2

    @property
    def pivot_inertia(self) -> float:
        """Body inertia about a spike tip."""
        return self.body_inertia + self.robot_mass * self.spike_length**2

    @property
    def omega_prefactor(self) -> float:
        """Ideal wheel speed per unit sqrt(g d) for a lossless pivot launch."""
        return self.pivot_inertia / (self.spike_length * self.wheel_inertia)


@dataclass(frozen=True)
class HopCommand:
    omega: float
    torque: float
    distance: float = 0.0

    def __post_init__(self):
        if self.omega < 0.0 or self.torque < 0.0 or self.distance < 0.0:
            raise ValueError("omega, torque and distance must be >= 0")


@dataclass(frozen=True)
class ContactParams:
    stiffness: float = 1.0e4  # N/m
    damping: float = 2.0 * math.sqrt(1.0e4 * ROBOT_MASS)  # critical for 3 kg
    friction: float = 1.5
    creep_velocity: float = 1e-4  # m/s, static-friction regularisation band

    def __post_init__(self):
        if not self.stiffness > 0.0:
            raise ValueError("stiffness must be > 0")
        if self.damping < 0.0 or self.friction < 0.0:
            raise ValueError("damping and friction must be >= 0")
        if not self.creep_velocity > 0.0:
            raise ValueError("creep_velocity must be > 0")


# ---------------------------------------------------------------------------
# Calibrated analytic model
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HopCalibration:
    efficiency: float
    torque_factor: float


def fit_calibration(points=REFERENCE_POINTS, spec: HopPlatformSpec = HopPlatformSpec(), distance: float = 1.0) -> HopCalibration:
    """Least-squares (in log space) fit of the two model constants.

    Each constant enters as a single multiplicative factor, so the log-space
    fit is the geometric mean of the per-point ratios.
    """
    eta = [w / (spec.omega_prefactor * math.sqrt(g * distance)) for g, w, _ in points]
    ct = [t / (spec.robot_mass * g * distance) for g, _, t in points]
    gm = lambda xs: math.exp(sum(math.log(x) for x in xs) / len(xs))  # noqa: E731
    return HopCalibration(gm(eta), gm(ct))


DEFAULT_CALIBRATION = fit_calibration()


def hop_controls(
    distance: float,
    g: float,
    spec: HopPlatformSpec = HopPlatformSpec(),
    calibration: HopCalibration = DEFAULT_CALIBRATION,
    wheels: WheelArray | None = None,
) -> HopCommand:
    """Wheel speed and brake torque for a hop of ``distance`` under gravity ``g``.

    With ``wheels`` given, a :class:`HopPracticalityWarning` flags commands the
    hardware cannot deliver.
    """
    if distance < 0.0:
        raise ValueError("distance must be >= 0")
    if not g > 0.0:
        raise ValueError("g must be > 0")
    omega = calibration.efficiency * spec.omega_prefactor * math.sqrt(g * distance)
    torque = calibration.torque_factor * spec.robot_mass * g * distance
    cmd = HopCommand(omega, torque, distance)
    if wheels is not None:
        check_practical(cmd, wheels)
    return cmd


def check_practical(cmd: HopCommand, wheels: WheelArray) -> bool:
    ok = cmd.omega <= wheels.max_speed and cmd.torque <= wheels.max_torque
    if not ok:
        warnings.warn(
            f"hop needs {cmd.omega:.0f} rad/s and {cmd.torque:.3g} N m; wheel limits are "
            f"{wheels.max_speed:.0f} rad/s and {wheels.max_torque:.3g} N m",
            HopPracticalityWarning,
            stacklevel=2,
        )
    return ok


def analytic_distance(cmd: HopCommand, g: float, spec: HopPlatformSpec = HopPlatformSpec(), calibration: HopCalibration = DEFAULT_CALIBRATION) -> float:
    """Inverse of the speed relation; zero if the torque cannot tip the body."""
    if cmd.torque < spec.robot_mass * g * spec.spike_length:
        return 0.0
    v = cmd.omega / (calibration.efficiency * spec.omega_prefactor)
    return v * v / g


# ---------------------------------------------------------------------------
# Contact
# ---------------------------------------------------------------------------


@njit(cache=True)
def _contact_kernel(pen, pen_rate, v_t, k, c, mu, v_eps):
    if pen <= 0.0:
        return 0.0, 0.0
    n = k * pen + c * pen_rate
    if n <= 0.0:
        return 0.0, 0.0
    s = v_t / v_eps
    if s > 1.0:
        s = 1.0
    elif s < -1.0:
        s = -1.0
    return n, -mu * n * s


def contact_force(penetration, penetration_rate, tangential_velocity, params: ContactParams, normal_load=None) -> np.ndarray:
    """Unilateral spring-damper normal force plus regularised Coulomb friction.

    ``tangential_velocity`` may be a scalar or a vector in the contact plane;
    the result is ``[normal, *tangential]``. A given ``normal_load`` replaces
    the spring-damper normal force.
    """
    vt = np.atleast_1d(np.asarray(tangential_velocity, dtype=float))
    speed = float(np.linalg.norm(vt))
    if normal_load is not None:
        n = max(0.0, float(normal_load))
        s = min(speed / params.creep_velocity, 1.0)
        ft = -params.friction * n * s
    else:
        n, ft = _contact_kernel(penetration, penetration_rate, speed, params.stiffness, params.damping, params.friction, params.creep_velocity)
    tang = ft * vt / speed if speed > 0.0 else np.zeros_like(vt)
    return np.concatenate([[n], tang])


# ---------------------------------------------------------------------------
# Planar episode
# ---------------------------------------------------------------------------

# Spikes point 45 degrees either side of straight down and straight up.
_SPIKE_ANGLES = np.array([-0.25 * math.pi, -0.75 * math.pi, 0.25 * math.pi, 0.75 * math.pi])


@njit(cache=True)
def _deriv(y, braking, tau, g, m, jb, iw, ell, k, c, mu, v_eps, angles):
    # y = x, z, vx, vz, theta, Omega, wheel speed (relative to body)
    fx = 0.0
    fz = -m * g
    torque = 0.0
    for a in angles:
        rx = ell * math.cos(y[4] + a)
        rz = ell * math.sin(y[4] + a)
        tz = y[1] + rz
        if tz < 0.0:
            vtx = y[2] - y[5] * rz
            vtz = y[3] + y[5] * rx
            n, ft = _contact_kernel(-tz, -vtz, vtx, k, c, mu, v_eps)
            fx += ft
            fz += n
            torque += rx * n - rz * ft
    tm = tau if braking else 0.0
    d = np.empty(7)
    d[0] = y[2]
    d[1] = y[3]
    d[2] = fx / m
    d[3] = fz / m
    d[4] = y[5]
    d[5] = (torque - tm) / jb
    d[6] = tm / iw
    return d


@njit(cache=True)
def _rk4(y, h, braking, tau, g, m, jb, iw, ell, k, c, mu, v_eps, angles):
    k1 = _deriv(y, braking, tau, g, m, jb, iw, ell, k, c, mu, v_eps, angles)
    k2 = _deriv(y + 0.5 * h * k1, braking, tau, g, m, jb, iw, ell, k, c, mu, v_eps, angles)
    k3 = _deriv(y + 0.5 * h * k2, braking, tau, g, m, jb, iw, ell, k, c, mu, v_eps, angles)
    k4 = _deriv(y + h * k3, braking, tau, g, m, jb, iw, ell, k, c, mu, v_eps, angles)
    return y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


@njit(cache=True)
def _lowest_tip(z, theta, ell, angles):
    lo = 1e300
    for a in angles:
        tz = z + ell * math.sin(theta + a)
        if tz < lo:
            lo = tz
    return lo


@njit(cache=True)
def _episode(omega, tau, g, m, jb, iw, ell, k, c, mu, v_eps, dt, t_max, angles):
    """Returns (status, distance, t_liftoff, t_land, flight-start state[7]).

    ``t_liftoff`` is the first instant no spike touches the ground, which can
    precede the end of the brake; the ballistic phase starts once the brake
    is over and the body is clear and rising.
    """
    y = np.zeros(7)
    y[1] = ell * math.cos(0.25 * math.pi) - m * g / (2.0 * k)  # resting on two spikes
    y[6] = -omega
    t_stop = iw * omega / tau if tau > 0.0 else 0.0
    t = 0.0
    if omega <= 0.0 or tau <= 0.0:
        return NO_LIFTOFF, 0.0, 0.0, 0.0, y
    quiet = 0.0
    t_clear = -1.0
    while t < t_max:
        braking = t < t_stop
        h = dt
        if braking and t + h > t_stop:
            h = t_stop - t
        y = _rk4(y, h, braking, tau, g, m, jb, iw, ell, k, c, mu, v_eps, angles)
        t += h
        if braking and t >= t_stop:
            y[6] = 0.0  # wheel stopped; removes round-off
        clear = _lowest_tip(y[1], y[4], ell, angles) > 0.0
        if clear and t_clear < 0.0:
            t_clear = t
        if t >= t_stop:
            if clear and y[3] > 0.0:
                break
            ke = 0.5 * m * (y[2] * y[2] + y[3] * y[3]) + 0.5 * jb * y[5] * y[5]
            quiet = quiet + h if ke < 1e-12 else 0.0
            if quiet > 1.0:
                return NO_LIFTOFF, 0.0, t, t, y
    if t >= t_max:
        return TIMEOUT, 0.0, t, t, y
    # ballistic flight: landed when the centre is back at its resting height
    z_rest = ell * math.cos(0.25 * math.pi)
    disc = y[3] * y[3] + 2.0 * g * (y[1] - z_rest)
    s = (y[3] + math.sqrt(max(disc, 0.0))) / g
    return NOMINAL, y[0] + y[2] * s, t_clear, t + s, y


@dataclass(frozen=True)
class HopEpisode:
    status: str
    distance: float
    liftoff_time: float
    landing_time: float
    liftoff_state: np.ndarray  # x, z, vx, vz, theta, Omega, wheel speed

    def flight_energy(self, times, g: float, spec: HopPlatformSpec) -> np.ndarray:
        """Mechanical energy at ``times`` seconds after lift-off (flight phase)."""
        y = self.liftoff_state
        t = np.asarray(times, dtype=float)
        vz = y[3] - g * t
        z = y[1] + y[3] * t - 0.5 * g * t * t
        m = spec.robot_mass
        return 0.5 * m * (y[2] ** 2 + vz**2) + 0.5 * spec.body_inertia * y[5] ** 2 + m * g * z


def hop_episode(
    cmd: HopCommand,
    g: float,
    spec: HopPlatformSpec = HopPlatformSpec(),
    contact: ContactParams = ContactParams(),
    dt: float = 1e-4,
    t_max: float = 600.0,
) -> HopEpisode:
    if not g > 0.0:
        raise ValueError("g must be > 0")
    if cmd.torque < spec.robot_mass * g * spec.spike_length:
        return HopEpisode("no_liftoff", 0.0, 0.0, 0.0, np.zeros(7))
    status, d, t_lo, t_land, y = _episode(
        cmd.omega, cmd.torque, g, spec.robot_mass, spec.body_inertia, spec.wheel_inertia, spec.spike_length,
        contact.stiffness, contact.damping, contact.friction, contact.creep_velocity, dt, t_max, _SPIKE_ANGLES,
    )
    # a rocking launch can settle a hair behind the start; distance is never negative
    return HopEpisode(STATUS_NAMES[status], max(float(d), 0.0), float(t_lo), float(t_land), y.copy())


def hop_distance(
    cmd: HopCommand,
    g: float,
    spec: HopPlatformSpec = HopPlatformSpec(),
    contact: ContactParams = ContactParams(),
    **kwargs,
) -> float:
    """Simulated lateral distance of a brake-launch episode; 0 when the body never leaves the ground."""
    return hop_episode(cmd, g, spec, contact, **kwargs).distance


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def fig6_table(gravities, distance: float = 1.0, spec: HopPlatformSpec = HopPlatformSpec()):
    """Rows of (g, omega, tau) needed for a hop of ``distance``."""
    rows = []
    for g in gravities:
        cmd = hop_controls(distance, float(g), spec)
        rows.append((float(g), cmd.omega, cmd.torque))
    return rows


def fig7_table(torques, omegas, g: float = 0.006, spec: HopPlatformSpec = HopPlatformSpec(), contact: ContactParams = ContactParams(), workers: int = 1):
    """Rows of (tau, omega, d, status) over the grid, in torque-major order."""
    grid = [(float(t), float(w)) for t in torques for w in omegas]

    def run(point):
        t, w = point
        ep = hop_episode(HopCommand(w, t), g, spec, contact)
        return (t, w, ep.distance, ep.status)

    if workers > 1 and len(grid) > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, grid))
    return [run(p) for p in grid]
