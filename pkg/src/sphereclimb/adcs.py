"""Three-axis reaction-wheel attitude control.

Body and wheel stack exchange angular momentum; with no external torque

    J_B w_B' + w_B x (J_B w_B) + J_RW w_RW' + w_B x (J_RW w_RW) = 0

where ``w_RW`` is the wheel spin relative to the body and the motor torque
``tau`` sets ``J_RW w_RW' = tau``. The PD law produces that wheel torque:

    tau = -K_p (e_des - e_act) - K_d (w_des - w_act)

so the body feels ``-tau`` and is driven towards ``e_des``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from numba import njit

from .simcore import DEFAULT_DT, quat_to_matrix

WHEEL_MASS = 0.35  # kg
WHEEL_RADIUS = 0.035  # m
WHEEL_INERTIA = 0.5 * WHEEL_MASS * WHEEL_RADIUS**2  # solid disk, 2.14e-4 kg m^2
ROBOT_MASS = 3.0
ROBOT_RADIUS = 0.15
BODY_INERTIA = 0.4 * ROBOT_MASS * ROBOT_RADIUS**2  # uniform 30 cm sphere, 0.027 kg m^2


@dataclass
class WheelArray:
    inertia: np.ndarray = field(default_factory=lambda: np.full(3, WHEEL_INERTIA))
    speeds: np.ndarray = field(default_factory=lambda: np.zeros(3))
    max_torque: float = 0.5  # N m
    max_speed: float = 6000.0 * 2.0 * math.pi / 60.0  # rad/s

    def __post_init__(self):
        self.inertia = np.broadcast_to(np.asarray(self.inertia, dtype=float), (3,)).copy()
        self.speeds = np.asarray(self.speeds, dtype=float).copy()
        if np.any(self.inertia <= 0.0):
            raise ValueError("wheel inertias must be positive")
        if not self.max_torque > 0.0 or not self.max_speed > 0.0:
            raise ValueError("wheel limits must be positive")

    @property
    def momentum(self) -> np.ndarray:
        return self.inertia * self.speeds


@dataclass(frozen=True)
class ControllerGains:
    kp: tuple[float, float, float]
    kd: tuple[float, float, float]

    def __post_init__(self):
        if min(self.kp) <= 0.0 or min(self.kd) <= 0.0:
            raise ValueError("controller gains must be positive")


def tune_gains(inertia=BODY_INERTIA, natural_frequency: float = 20.0, damping_ratio: float = 1.0) -> ControllerGains:
    """Per-axis PD gains giving the requested closed-loop second-order response.

    For a single axis ``J e'' = -K_p e - K_d e'`` so ``K_p = J w_n^2`` and
    ``K_d = 2 zeta J w_n``.
    """
    j = np.broadcast_to(np.asarray(inertia, dtype=float), (3,))
    kp = tuple(float(x) for x in j * natural_frequency**2)
    kd = tuple(float(x) for x in 2.0 * damping_ratio * j * natural_frequency)
    return ControllerGains(kp, kd)


DEFAULT_GAINS = tune_gains()


@njit(cache=True)
def _wrap(a):
    w = (a + math.pi) % (2.0 * math.pi) - math.pi
    return math.pi if w == -math.pi else w


@njit(cache=True)
def _euler(q):
    w, x, y, z = q[0], q[1], q[2], q[3]
    roll = math.atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    s = min(1.0, max(-1.0, 2.0 * (w * y - z * x)))
    pitch = math.asin(s)
    yaw = math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return roll, pitch, yaw


@njit(cache=True)
def _coupled(w, jb, jw, ws, cmd, max_torque, max_speed):
    """Returns (omega_b_dot, wheel_accel, applied torque, saturated)."""
    tau = np.empty(3)
    sat = False
    for i in range(3):
        t = min(max(cmd[i], -max_torque), max_torque)
        if abs(ws[i]) >= max_speed and t * ws[i] > 0.0:
            t = 0.0
        if t != cmd[i]:
            sat = True
        tau[i] = t
    h0 = jb[0] * w[0] + jw[0] * ws[0]
    h1 = jb[1] * w[1] + jw[1] * ws[1]
    h2 = jb[2] * w[2] + jw[2] * ws[2]
    wd = np.empty(3)
    wd[0] = (-tau[0] - (w[1] * h2 - w[2] * h1)) / jb[0]
    wd[1] = (-tau[1] - (w[2] * h0 - w[0] * h2)) / jb[1]
    wd[2] = (-tau[2] - (w[0] * h1 - w[1] * h0)) / jb[2]
    return wd, tau / jw, tau, sat


def saturate(torque, wheels: WheelArray) -> tuple[np.ndarray, bool]:
    """Clip to the torque limit and refuse torque that would overspeed a wheel."""
    _, _, tau, sat = _coupled(np.zeros(3), np.ones(3), wheels.inertia, wheels.speeds,
                              np.asarray(torque, dtype=float), wheels.max_torque, wheels.max_speed)
    return tau, bool(sat)


def coupled_dynamics(omega_b, inertia_b, wheels: WheelArray, wheel_torques):
    """Body and wheel accelerations for the given wheel motor torques.

    Returns ``(omega_b_dot, wheel_accel, saturated)``.
    """
    jb = np.broadcast_to(np.asarray(inertia_b, dtype=float), (3,)).copy()
    wd, wsd, _, sat = _coupled(np.asarray(omega_b, dtype=float), jb, wheels.inertia, wheels.speeds,
                               np.asarray(wheel_torques, dtype=float), wheels.max_torque, wheels.max_speed)
    return wd, wsd, bool(sat)


def pd_torque(e_des, e_act, omega_des, omega_act, gains: ControllerGains, max_torque: float | None = None) -> np.ndarray:
    err = np.asarray(e_des, dtype=float) - np.asarray(e_act, dtype=float)
    err = np.mod(err + math.pi, 2.0 * math.pi) - math.pi
    err = np.where(err == -math.pi, math.pi, err)
    rate_err = np.asarray(omega_des, dtype=float) - np.asarray(omega_act, dtype=float)
    tau = -np.asarray(gains.kp) * err - np.asarray(gains.kd) * rate_err
    if max_torque is not None:
        tau = np.clip(tau, -max_torque, max_torque)
    return tau


def inertial_momentum(attitude, omega_b, inertia_b, wheels: WheelArray) -> np.ndarray:
    jb = np.broadcast_to(np.asarray(inertia_b, dtype=float), (3,))
    h_body = jb * np.asarray(omega_b, dtype=float) + wheels.inertia * wheels.speeds
    return quat_to_matrix(attitude) @ h_body


# ---------------------------------------------------------------------------
# Closed-loop propagation
# ---------------------------------------------------------------------------


@njit(cache=True)
def _deriv(y, target, kp, kd, jb, jw, max_torque, max_speed, closed_loop):
    q = y[0:4]
    w = y[4:7]
    cmd = np.zeros(3)
    if closed_loop:
        r, p, yw = _euler(q)
        e0 = _wrap(target[0] - r)
        e1 = _wrap(target[1] - p)
        e2 = _wrap(target[2] - yw)
        # Euler error expressed about body axes (ZYX kinematics); identical to
        # the plain Euler law near zero roll/pitch, well conditioned away from it
        sr, cr = math.sin(r), math.cos(r)
        sp, cp = math.sin(p), math.cos(p)
        eb = (e0 - sp * e2, cr * e1 + sr * cp * e2, -sr * e1 + cr * cp * e2)
        for i in range(3):
            # rate setpoint is zero
            cmd[i] = -kp[i] * eb[i] + kd[i] * w[i]
    wd, wsd, _, sat = _coupled(w, jb, jw, y[7:10], cmd, max_torque, max_speed)
    d = np.empty(10)
    d[0] = 0.5 * (-q[1] * w[0] - q[2] * w[1] - q[3] * w[2])
    d[1] = 0.5 * (q[0] * w[0] + q[2] * w[2] - q[3] * w[1])
    d[2] = 0.5 * (q[0] * w[1] - q[1] * w[2] + q[3] * w[0])
    d[3] = 0.5 * (q[0] * w[2] + q[1] * w[1] - q[2] * w[0])
    d[4:7] = wd
    d[7:10] = wsd
    return d, sat


@njit(cache=True)
def _step(y, h, target, kp, kd, jb, jw, max_torque, max_speed, closed_loop):
    k1, s1 = _deriv(y, target, kp, kd, jb, jw, max_torque, max_speed, closed_loop)
    k2, s2 = _deriv(y + 0.5 * h * k1, target, kp, kd, jb, jw, max_torque, max_speed, closed_loop)
    k3, s3 = _deriv(y + 0.5 * h * k2, target, kp, kd, jb, jw, max_torque, max_speed, closed_loop)
    k4, s4 = _deriv(y + h * k3, target, kp, kd, jb, jw, max_torque, max_speed, closed_loop)
    out = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    n = math.sqrt(out[0] ** 2 + out[1] ** 2 + out[2] ** 2 + out[3] ** 2)
    out[0:4] /= n
    return out, s1 or s2 or s3 or s4


@njit(cache=True)
def _errors(y, target):
    r, p, yw = _euler(y[0:4])
    e = np.empty(3)
    e[0] = _wrap(target[0] - r)
    e[1] = _wrap(target[1] - p)
    e[2] = _wrap(target[2] - yw)
    return e


@njit(cache=True)
def _slew(y0, target, kp, kd, jb, jw, max_torque, max_speed, dt, n_max, angle_tol, rate_tol, hold_steps):
    rows = np.empty((n_max + 1, 10))
    errs = np.empty((n_max + 1, 3))
    rows[0] = y0
    errs[0] = _errors(y0, target)
    y = y0.copy()
    settled_at = -1
    sat = False
    n = 0
    while True:
        e = errs[n]
        if settled_at < 0:
            ok = True
            for i in range(3):
                if abs(e[i]) >= angle_tol or abs(y[4 + i]) >= rate_tol:
                    ok = False
            if ok:
                settled_at = n
        if settled_at >= 0 and n >= settled_at + hold_steps:
            break
        if n == n_max:
            break
        y, s = _step(y, dt, target, kp, kd, jb, jw, max_torque, max_speed, True)
        sat = sat or s
        n += 1
        rows[n] = y
        errs[n] = _errors(y, target)
    return rows[: n + 1], errs[: n + 1], settled_at, sat


@njit(cache=True)
def _coast(y0, jb, jw, max_torque, max_speed, dt, n):
    rows = np.empty((n + 1, 10))
    rows[0] = y0
    dummy = np.zeros(3)
    for i in range(n):
        rows[i + 1], _ = _step(rows[i], dt, dummy, dummy, dummy, jb, jw, max_torque, max_speed, False)
    return rows


@dataclass
class SlewResult:
    times: np.ndarray
    attitudes: np.ndarray
    rates: np.ndarray
    wheel_speeds: np.ndarray
    errors: np.ndarray  # wrapped Euler error per sample
    settled: bool
    settle_time: float
    saturated: bool

    @property
    def attitude(self) -> np.ndarray:
        return self.attitudes[-1]

    @property
    def rate(self) -> np.ndarray:
        return self.rates[-1]

    @property
    def wheel_speed(self) -> np.ndarray:
        return self.wheel_speeds[-1]

    @property
    def duration(self) -> float:
        return float(self.times[-1])


def _pack(attitude, omega_b, wheels):
    return np.concatenate([np.asarray(attitude, float), np.asarray(omega_b, float), np.asarray(wheels.speeds, float)])


def coast(attitude, omega_b, wheels: WheelArray, inertia_b=BODY_INERTIA, duration: float = 1.0, dt: float = DEFAULT_DT):
    """Torque-free propagation with the wheels left spinning.

    Returns ``(times, attitudes, rates, wheel_speeds)``.
    """
    jb = np.broadcast_to(np.asarray(inertia_b, dtype=float), (3,)).copy()
    n = int(round(duration / dt))
    rows = _coast(_pack(attitude, omega_b, wheels), jb, wheels.inertia, wheels.max_torque, wheels.max_speed, dt, n)
    return np.arange(n + 1) * dt, rows[:, 0:4], rows[:, 4:7], rows[:, 7:10]


def slew_to(
    target,
    attitude,
    omega_b,
    wheels: WheelArray,
    gains: ControllerGains = DEFAULT_GAINS,
    inertia_b=BODY_INERTIA,
    timeout: float = 10.0,
    dt: float = DEFAULT_DT,
    angle_tol: float = 1e-3,
    rate_tol: float = 1e-3,
    hold: float = 0.0,
) -> SlewResult:
    """Drive the body to the Euler target (roll, pitch, yaw) with the PD law.

    Stops as soon as every wrapped angle error is below ``angle_tol`` and every
    body rate below ``rate_tol`` (after ``hold`` extra seconds), or at
    ``timeout`` with ``settled=False``.
    """
    if not timeout > 0.0:
        raise ValueError("timeout must be positive")
    jb = np.broadcast_to(np.asarray(inertia_b, dtype=float), (3,)).copy()
    rows, errs, settled_at, sat = _slew(
        _pack(attitude, omega_b, wheels), np.asarray(target, dtype=float),
        np.asarray(gains.kp, dtype=float), np.asarray(gains.kd, dtype=float), jb, wheels.inertia,
        wheels.max_torque, wheels.max_speed, dt, int(math.ceil(timeout / dt - 1e-9)), angle_tol, rate_tol,
        int(round(hold / dt)),
    )
    times = np.arange(len(rows)) * dt
    return SlewResult(
        times=times,
        attitudes=rows[:, 0:4],
        rates=rows[:, 4:7],
        wheel_speeds=rows[:, 7:10],
        errors=errs,
        settled=settled_at >= 0,
        settle_time=float(settled_at * dt) if settled_at >= 0 else float(times[-1]),
        saturated=bool(sat),
    )
