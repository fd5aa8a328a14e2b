"""Math primitives, rigid-body state and fixed-step RK4 integration.

Conventions
-----------
- Quaternions are scalar-first ``(w, x, y, z)`` and rotate body vectors into
  the world frame: ``v_world = R(q) @ v_body``.
- Euler angles are intrinsic Z-Y-X (yaw, then pitch, then roll) and are
  returned/accepted in the order ``(roll, pitch, yaw)``.
- Angular velocity is expressed in the body frame.
- Everything is SI.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

DEFAULT_DT = 1e-3
OMEGA_CAP = 1e5  # rad/s; larger body rates mean the integration has blown up
GIMBAL_MARGIN = 0.01  # rad from +-pi/2 pitch


class IntegrationError(RuntimeError):
    """Raised when a state derivative or integrated state becomes unusable."""


class GimbalLockWarning(UserWarning):
    pass


# ---------------------------------------------------------------------------
# Quaternion helpers
# ---------------------------------------------------------------------------


def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    n = math.sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3])
    if n == 0.0 or not math.isfinite(n):
        raise IntegrationError(f"attitude quaternion has invalid norm {n!r}")
    return q / n


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_derivative(q: np.ndarray, omega_body: np.ndarray) -> np.ndarray:
    """q_dot = 0.5 * q (x) [0, omega]."""
    w, x, y, z = q
    p, r_, s = omega_body
    return 0.5 * np.array(
        [
            -x * p - y * r_ - z * s,
            w * p + y * s - z * r_,
            w * r_ - x * s + z * p,
            w * s + x * r_ - y * p,
        ]
    )


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_rotate(q: np.ndarray, v: np.ndarray) -> np.ndarray:
    return quat_to_matrix(q) @ v


# ---------------------------------------------------------------------------
# Euler angles (intrinsic Z-Y-X)
# ---------------------------------------------------------------------------


def euler_to_attitude(roll: float, pitch: float, yaw: float) -> np.ndarray:
    """Quaternion for intrinsic yaw-pitch-roll (Z-Y-X) Euler angles."""
    cr, sr = math.cos(0.5 * roll), math.sin(0.5 * roll)
    cp, sp = math.cos(0.5 * pitch), math.sin(0.5 * pitch)
    cy, sy = math.cos(0.5 * yaw), math.sin(0.5 * yaw)
    return np.array(
        [
            cr * cp * cy + sr * sp * sy,
            sr * cp * cy - cr * sp * sy,
            cr * sp * cy + sr * cp * sy,
            cr * cp * sy - sr * sp * cy,
        ]
    )


def _euler_from_quat(q) -> tuple[float, float, float]:
    w, x, y, z = q
    roll = math.atan2(2.0 * (w * x + y * z), 1.0 - 2.0 * (x * x + y * y))
    s = 2.0 * (w * y - z * x)
    pitch = math.asin(max(-1.0, min(1.0, s)))
    yaw = math.atan2(2.0 * (w * z + x * y), 1.0 - 2.0 * (y * y + z * z))
    return roll, pitch, yaw


def attitude_to_euler(q: np.ndarray) -> tuple[float, float, float]:
    """Inverse of :func:`euler_to_attitude`.

    Near gimbal lock (``|pitch| >= pi/2 - 0.01``) roll and yaw are no longer
    separable; a :class:`GimbalLockWarning` is emitted but angles are still
    returned.
    """
    roll, pitch, yaw = _euler_from_quat(q)
    if abs(pitch) >= 0.5 * math.pi - GIMBAL_MARGIN:
        warnings.warn(
            f"pitch {pitch:.4f} rad is within {GIMBAL_MARGIN} rad of gimbal lock",
            GimbalLockWarning,
            stacklevel=2,
        )
    return roll, pitch, yaw


def wrap_angle(a):
    """Wrap angle(s) into (-pi, pi]."""
    w = np.mod(np.asarray(a, dtype=float) + math.pi, 2.0 * math.pi) - math.pi
    w = np.where(w == -math.pi, math.pi, w)
    return float(w) if np.ndim(w) == 0 else w


# ---------------------------------------------------------------------------
# State types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Environment:
    gravity_magnitude: float
    gravity_direction: tuple[float, float, float] = (0.0, 0.0, -1.0)

    def __post_init__(self):
        if not self.gravity_magnitude >= 0.0:
            raise ValueError("gravity_magnitude must be >= 0")
        n = math.sqrt(sum(c * c for c in self.gravity_direction))
        if abs(n - 1.0) > 1e-9:
            raise ValueError(f"gravity_direction must be a unit vector (norm {n})")

    @property
    def gravity(self) -> np.ndarray:
        return self.gravity_magnitude * np.asarray(self.gravity_direction, dtype=float)


MARS = Environment(3.71)
PHOBOS = Environment(0.006)


@dataclass
class RigidBodyState:
    position: np.ndarray = field(default_factory=lambda: np.zeros(3))
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    attitude: np.ndarray = field(default_factory=quat_identity)
    angular_velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)
        self.velocity = np.asarray(self.velocity, dtype=float)
        self.attitude = np.asarray(self.attitude, dtype=float)
        self.angular_velocity = np.asarray(self.angular_velocity, dtype=float)

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [self.position, self.velocity, self.attitude, self.angular_velocity]
        )

    @classmethod
    def from_vector(cls, y: np.ndarray) -> "RigidBodyState":
        return cls(y[0:3].copy(), y[3:6].copy(), y[6:10].copy(), y[10:13].copy())

    def copy(self) -> "RigidBodyState":
        return replace(
            self,
            position=self.position.copy(),
            velocity=self.velocity.copy(),
            attitude=self.attitude.copy(),
            angular_velocity=self.angular_velocity.copy(),
        )


# ---------------------------------------------------------------------------
# Integration
# ---------------------------------------------------------------------------

_STATE_FIELDS = (
    ("position", slice(0, 3)),
    ("velocity", slice(3, 6)),
    ("attitude", slice(6, 10)),
    ("angular_velocity", slice(10, 13)),
)


def _check_finite(vec: np.ndarray, what: str) -> None:
    if np.all(np.isfinite(vec)):
        return
    for name, sl in _STATE_FIELDS:
        if not np.all(np.isfinite(vec[sl])):
            raise IntegrationError(f"non-finite {what} of {name}")
    raise IntegrationError(f"non-finite {what}")


def rk4_step(f: Callable[[float, np.ndarray], np.ndarray], t: float, y: np.ndarray, dt: float) -> np.ndarray:
    """One classical Runge-Kutta step of ``y' = f(t, y)``."""
    k1 = f(t, y)
    k2 = f(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


ForceFn = Callable[[float, RigidBodyState], np.ndarray]


def rigid_body_derivative(
    t: float,
    y: np.ndarray,
    force_fn: ForceFn,
    torque_fn: ForceFn,
    inertia: np.ndarray,
    mass: float,
) -> np.ndarray:
    state = RigidBodyState.from_vector(y)
    force = np.asarray(force_fn(t, state), dtype=float)
    torque = np.asarray(torque_fn(t, state), dtype=float)
    w = state.angular_velocity
    dy = np.empty(13)
    dy[0:3] = state.velocity
    dy[3:6] = force / mass
    dy[6:10] = quat_derivative(state.attitude, w)
    dy[10:13] = (torque - np.cross(w, inertia * w)) / inertia
    _check_finite(dy, "derivative")
    return dy


def integrate_step(
    state: RigidBodyState,
    force_fn: ForceFn,
    torque_fn: ForceFn,
    inertia,
    mass: float,
    dt: float = DEFAULT_DT,
    t: float = 0.0,
    omega_cap: float = OMEGA_CAP,
) -> RigidBodyState:
    """Advance a free rigid body by one RK4 step.

    ``force_fn(t, state)`` returns the world-frame force, ``torque_fn(t, state)``
    the body-frame torque about the centre of mass. ``inertia`` is the
    diagonal of the principal inertia tensor.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    if not mass > 0.0:
        raise ValueError("mass must be positive")
    inertia = np.asarray(inertia, dtype=float)
    if inertia.shape != (3,) or np.any(inertia <= 0.0):
        raise ValueError("inertia must be a positive diagonal (3,)")

    def f(tt, yy):
        return rigid_body_derivative(tt, yy, force_fn, torque_fn, inertia, mass)

    y1 = rk4_step(f, t, state.to_vector(), dt)
    _check_finite(y1, "state")
    y1[6:10] = quat_normalize(y1[6:10])
    if np.linalg.norm(y1[10:13]) > omega_cap:
        raise IntegrationError(
            f"angular_velocity magnitude {np.linalg.norm(y1[10:13]):.3g} rad/s exceeds cap {omega_cap:g}"
        )
    return RigidBodyState.from_vector(y1)


def zero_vector(t: float, state: RigidBodyState) -> np.ndarray:
    return np.zeros(3)
