"""Cooperative four-robot climb.

One robot moves at a time while the other three stay anchored by their
spines. A hop is a slew to the burn attitude, a thrust arc (or a wheel-brake
launch at low gravity), a grip attempt on touchdown and a settle. A failed
grip lets the robot slide until the tethers arrest it, after which it
re-hops to the same target.

Positions live in the slope frame of :mod:`sphereclimb.terrain`, so resting
robot centres sit at ``z = 0`` and "up-slope" is ``+y``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _multibody as mb
from .adcs import BODY_INERTIA, DEFAULT_GAINS, WHEEL_INERTIA, ControllerGains, WheelArray, slew_to
from .grip import GripModel, attempt_grip, required_spines
from .propulsion import PropellantExhaustedError, PropellantState, ThrusterSpec, consume_hop, thrust
from .rwhop import HopPlatformSpec, hop_controls
from .simcore import RigidBodyState, quat_identity, quat_rotate
from .terrain import TerrainModel, slope_load
from .tether import TetherSpec, assemble_x_network

SQUARE_FORMATION = ((1.0, 1.0, 0.0), (1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 0.0))
PROPULSIVE, REACTION_WHEEL = "propulsive", "reaction_wheel"


class RobotMode(enum.Enum):
    ANCHORED = "Anchored"
    RELEASING = "ReleasingGrip"
    HOPPING = "Hopping"
    GRIP_ATTEMPT = "GripAttempt"
    SLIPPING = "Slipping"
    ARRESTED = "Arrested"
    RECOVERING = "Recovering"


MODE_CODES = {m: i for i, m in enumerate(RobotMode)}


class ClimbError(RuntimeError):
    """Climb stopped early; ``state`` and ``record`` hold the progress so far."""

    state = None
    record = None


class ClimbAbortedError(ClimbError):
    pass


class SystemSlipError(ClimbError):
    pass


class InfeasibleHopModeError(ValueError):
    pass


@dataclass(frozen=True)
class ClimbPlan:
    hop_distance: float = 0.75
    order: tuple[int, ...] = (1, 2, 3, 4)
    cycles: int = 1
    max_retries: int = 3

    def __post_init__(self):
        if self.hop_distance < 0.0:
            raise ValueError("hop_distance must be >= 0")
        if sorted(self.order) != [1, 2, 3, 4]:
            raise ValueError(f"order must be a permutation of 1..4, got {self.order}")
        if self.cycles < 0 or self.max_retries < 0:
            raise ValueError("cycles and max_retries must be >= 0")


@dataclass(frozen=True)
class ClimbSetup:
    """Physical and numerical parameters of a climb."""

    gravity: float = 3.71
    terrain: TerrainModel = TerrainModel()
    robot_mass: float = 3.0
    robot_radius: float = 0.15
    body_inertia: float = BODY_INERTIA
    wheel_inertia: float = WHEEL_INERTIA
    wheel_max_torque: float = 0.5
    wheel_max_speed: float = 6000.0 * 2.0 * math.pi / 60.0
    gains: ControllerGains = DEFAULT_GAINS
    thruster: ThrusterSpec = ThrusterSpec()
    propellant_mass: float = 0.1  # kg per robot at start
    tether: TetherSpec = TetherSpec()
    topology: str = "spokes"
    pretension: bool = False
    grip: GripModel = GripModel()
    contact_stiffness: float = 1.0e4
    contact_damping_ratio: float = 1.0
    creep_velocity: float = 5e-3
    hop_mode: str = "auto"
    mode_threshold: float = 0.1  # m/s^2
    spike_length: float = 0.25
    dt: float = 1e-3
    sample_rate: float = 100.0
    flight_time: float = 0.75  # s of coast after burn-out
    landing_tolerance: float = 0.05
    settle_time: float = 0.2  # s; tuned so one four-hop Mars cycle takes about 10 s
    arrest_speed: float = 0.01
    arrest_hold: float = 0.2
    max_slip_time: float = 120.0
    initial_settle: float = 10.0
    slew_angle_tol: float = 1e-6
    slew_rate_tol: float = 1e-5
    slew_timeout: float = 10.0
    initial_positions: tuple = SQUARE_FORMATION
    forced_failures: tuple = ()  # (robot, hop number) pairs that always fail to grip

    def __post_init__(self):
        for name in ("gravity", "robot_mass", "robot_radius", "body_inertia", "wheel_inertia", "wheel_max_torque",
                     "wheel_max_speed", "contact_stiffness", "creep_velocity", "dt", "sample_rate", "flight_time",
                     "landing_tolerance", "arrest_speed", "slew_timeout", "spike_length"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be > 0")
        for name in ("propellant_mass", "contact_damping_ratio", "settle_time", "arrest_hold", "initial_settle"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.hop_mode not in ("auto", PROPULSIVE, REACTION_WHEEL):
            raise ValueError(f"hop_mode must be auto, {PROPULSIVE} or {REACTION_WHEEL}")
        if np.asarray(self.initial_positions, dtype=float).shape != (4, 3):
            raise ValueError("initial_positions must be four xyz triples")

    @property
    def gravity_vector(self) -> np.ndarray:
        return self.terrain.gravity_vector(self.gravity)

    @property
    def system_mass(self) -> float:
        n_tethers = 4 if self.topology == "spokes" else 2
        per = self.tether.mass if self.topology == "spokes" else 2.0 * self.tether.mass
        return 4.0 * self.robot_mass + n_tethers * per

    @property
    def slope_load(self) -> float:
        return slope_load(self.system_mass, self.gravity, self.terrain.slope)

    @property
    def share_load(self) -> float:
        return self.slope_load / 3.0

    def wheels(self, speeds=None) -> WheelArray:
        return WheelArray(self.wheel_inertia, np.zeros(3) if speeds is None else speeds,
                          self.wheel_max_torque, self.wheel_max_speed)

    def platform(self) -> HopPlatformSpec:
        return HopPlatformSpec(spike_length=self.spike_length, robot_mass=self.robot_mass, body_inertia=self.body_inertia)


@dataclass(frozen=True)
class Event:
    time: float
    robot: int  # 1-based, 0 for system-wide
    kind: str
    detail: str = ""

    def line(self) -> str:
        return f"{self.time:.6f}\t{self.robot}\t{self.kind}\t{self.detail}"


@dataclass
class TrajectoryRecord:
    times: list = field(default_factory=list)
    positions: list = field(default_factory=list)  # (4, 3) each
    attitudes: list = field(default_factory=list)
    rates: list = field(default_factory=list)
    modes: list = field(default_factory=list)
    spines: list = field(default_factory=list)
    propellant: list = field(default_factory=list)
    centers: list = field(default_factory=list)
    tensions: list = field(default_factory=list)

    def __len__(self):
        return len(self.times)

    def arrays(self) -> dict:
        return {k: np.array(v) for k, v in self.__dict__.items()}

    def header(self, n_links: int) -> list[str]:
        cols = ["t"]
        for i in range(1, 5):
            cols += [f"r{i}_{c}" for c in ("x", "y", "z", "qw", "qx", "qy", "qz", "wx", "wy", "wz", "mode", "spines", "propellant")]
        cols += ["center_x", "center_y", "center_z"]
        cols += [f"tension_{k}" for k in range(1, n_links + 1)]
        return cols

    def rows(self):
        for n, t in enumerate(self.times):
            row = [t]
            for i in range(4):
                row += list(self.positions[n][i]) + list(self.attitudes[n][i]) + list(self.rates[n][i])
                row += [self.modes[n][i], self.spines[n][i], self.propellant[n][i]]
            row += list(self.centers[n]) + list(self.tensions[n])
            yield row


def instantaneous_center(positions) -> np.ndarray:
    p = np.asarray(positions, dtype=float)
    if p.shape != (4, 3):
        raise ValueError("four positions are required")
    return p.mean(axis=0)


def hop_mode_select(gravity: float, override: str = "auto", threshold: float = 0.1,
                    distance: float = 1.0, platform: HopPlatformSpec | None = None,
                    wheels: WheelArray | None = None) -> str:
    """Propulsive above ``threshold`` gravity, wheel-brake hops below.

    An explicit ``override`` wins but a wheel-brake hop that needs more torque
    or speed than the wheels have raises :class:`InfeasibleHopModeError`.
    """
    if override not in ("auto", PROPULSIVE, REACTION_WHEEL):
        raise ValueError(f"unknown hop mode {override!r}")
    mode = override
    if mode == "auto":
        mode = PROPULSIVE if gravity > threshold else REACTION_WHEEL
    if mode == REACTION_WHEEL:
        platform = platform or HopPlatformSpec()
        wheels = wheels or WheelArray()
        cmd = hop_controls(distance, gravity, platform)
        if cmd.torque > wheels.max_torque or cmd.omega > wheels.max_speed:
            raise InfeasibleHopModeError(
                f"wheel-brake hop of {distance} m at g={gravity} needs {cmd.torque:.3g} N m and "
                f"{cmd.omega:.0f} rad/s; wheels give {wheels.max_torque} N m and {wheels.max_speed:.0f} rad/s"
            )
    return mode


def burn_solution(delta, g_vec, accel: float, flight_time: float, iters: int = 100):
    """Thrust direction and burn time that carry a body ``delta`` away.

    Constant acceleration ``accel`` along ``u`` for ``T_b`` then a coast of
    ``flight_time`` under gravity ``g_vec``:
    ``delta = accel u (T_b^2/2 + T_b T_f) + g_vec (T_b + T_f)^2 / 2``.
    """
    delta = np.asarray(delta, dtype=float)
    tb = 0.0
    w = delta
    for _ in range(iters):
        total = tb + flight_time
        w = delta - 0.5 * g_vec * total * total
        nw = float(np.linalg.norm(w))
        tb_new = -flight_time + math.sqrt(flight_time**2 + 2.0 * nw / accel)
        if abs(tb_new - tb) < 1e-15:
            tb = tb_new
            break
        tb = tb_new
    return w / np.linalg.norm(w), tb


def burn_attitude(direction) -> tuple[float, float, float]:
    """(roll, pitch, yaw) that point body +z along ``direction``, yaw fixed at 0."""
    u = np.asarray(direction, dtype=float)
    return math.atan2(-u[1], math.hypot(u[0], u[2])), math.atan2(u[0], u[2]), 0.0


class ClimbState:
    """Everything that evolves during a climb."""

    def __init__(self, setup: ClimbSetup):
        self.setup = setup
        p = np.asarray(setup.initial_positions, dtype=float)
        net = assemble_x_network(p, setup.tether, setup.topology, pretension=setup.pretension,
                                 slack_floor=not setup.pretension)
        self.network = net
        self.links = net.links.astype(np.int64)
        self.rest = net.rest_lengths.copy()
        self.broken = np.zeros(len(self.links), dtype=np.bool_)
        self.break_time = np.full(len(self.links), -1.0)
        self.pos = np.vstack([p, net.junction_position])
        self.vel = np.zeros((5, 3))
        self.attitude = np.tile(quat_identity(), (4, 1))
        self.rate = np.zeros((4, 3))
        self.wheel_speeds = np.zeros((4, 3))
        self.modes = [RobotMode.ANCHORED] * 4
        initial = min(required_spines(setup.share_load, setup.grip.capacity), setup.grip.spine_count)
        self.spines = np.full(4, initial, dtype=np.int64)
        self.propellant = [PropellantState(setup.propellant_mass) for _ in range(4)]
        self.hops = np.zeros(4, dtype=np.int64)
        self.time = 0.0
        self.events: list[Event] = []
        self.record = TrajectoryRecord()
        self.sample_k = 0
        self.attempts = 0
        self.failures = 0
        self.hop_steps = 0
        self.max_excursion = 0.0
        self.hop_log: list[dict] = []
        self.rng = setup.grip.rng()
        self.hop_mode = hop_mode_select(setup.gravity, setup.hop_mode, setup.mode_threshold, 1.0,
                                        setup.platform(), setup.wheels())
        self._robot_mass = setup.robot_mass + net.robot_lumped_mass
        self.mass = np.append(self._robot_mass, max(net.junction_mass, 1e-3))
        self.offset = np.array([0.0, 0.0, 0.0, 0.0, setup.robot_radius])
        zeta = setup.contact_damping_ratio
        self.cdamp = 2.0 * zeta * np.sqrt(setup.contact_stiffness * self.mass)
        self.pinned = np.array([True, True, True, True, net.topology != "spokes"])
        self._settle_junction()

    # -- views -------------------------------------------------------------

    @property
    def positions(self) -> np.ndarray:
        return self.pos[:4].copy()

    @property
    def junction(self) -> np.ndarray:
        return self.pos[4].copy()

    @property
    def center(self) -> np.ndarray:
        return instantaneous_center(self.pos[:4])

    def robot(self, i: int) -> RigidBodyState:
        return RigidBodyState(self.pos[i].copy(), self.vel[i].copy(), self.attitude[i].copy(), self.rate[i].copy())

    @property
    def propellant_used(self) -> float:
        return sum(self.setup.propellant_mass - p.remaining_mass for p in self.propellant)

    def log(self, robot: int, kind: str, detail: str = "") -> Event:
        ev = Event(round(self.time, 9), robot, kind, detail)
        self.events.append(ev)
        return ev

    def set_mode(self, i: int, mode: RobotMode) -> None:
        old = self.modes[i]
        if old != mode:
            self.modes = list(self.modes)
            self.modes[i] = mode
            self.log(i + 1, "mode", f"{old.value}->{mode.value}")

    # -- integration -------------------------------------------------------

    def _settle_junction(self) -> None:
        if self.setup.initial_settle > 0.0:
            self._advance(self.setup.initial_settle, record=False, reset_time=True)

    def _advance(self, duration, mode=mb.RUN_TO_END, mover=-1, thrust_vec=None, burn=0.0,
                 track=None, record=True, reset_time=False, pos=None, vel=None, aux=None):
        """Integrate for up to ``duration`` seconds; returns (status, aux)."""
        s = self.setup
        trial = pos is not None
        pos = self.pos if pos is None else pos
        vel = self.vel if vel is None else vel
        aux = np.array([0.0, 0.0, pos[mover, 1] if mover >= 0 else 0.0, 0.0]) if aux is None else aux
        t0 = 0.0 if reset_time else self.time
        thrust_vec = np.zeros(3) if thrust_vec is None else np.asarray(thrust_vec, dtype=float)
        period = 1.0 / s.sample_rate
        t, t_end = t0, t0 + duration
        broken = self.broken.copy() if trial else self.broken
        break_time = self.break_time.copy() if trial else self.break_time
        brk = math.inf if s.tether.breaking_load is None else s.tether.breaking_load
        status = mb.REACHED_END
        while True:
            cap = int((t_end - t) / period) + 3 if record else 1
            buf_t = np.empty(cap)
            buf_pos = np.empty((cap, 5, 3))
            buf_vel = np.empty((cap, 5, 3))
            buf_ten = np.empty((cap, len(self.links)))
            t, status, k, ns = mb.advance(
                pos, vel, self.mass, self.pinned, self.offset, self.cdamp, self.links, self.rest, broken, break_time,
                s.tether.stiffness, s.tether.damping, brk, s.gravity_vector, s.contact_stiffness, s.terrain.friction,
                s.creep_velocity, mover, thrust_vec, t0 + burn, t, t_end, s.dt, mode, 1e-3, s.arrest_speed,
                s.arrest_hold, aux, self.sample_k, period, buf_t, buf_pos, buf_vel, buf_ten, record,
            )
            if record:
                self._store(buf_t[:ns], buf_pos[:ns], buf_ten[:ns], track)
                self.sample_k = k
            if status != mb.REACHED_END or t >= t_end - 1e-12 or not record:
                break
        if not trial and not reset_time:
            self.time = t
            for li in np.flatnonzero(self.break_time >= 0.0):
                tag = f"link {li + 1}"
                if not any(e.kind == "tether_failure" and e.detail == tag for e in self.events):
                    self.events.append(Event(round(float(self.break_time[li]), 9), 0, "tether_failure", tag))
        return status, aux, t

    def _store(self, times, positions, tens, track) -> None:
        rec = self.record
        codes = [MODE_CODES[m] for m in self.modes]
        for n, t in enumerate(times):
            att = self.attitude.copy()
            rate = self.rate.copy()
            if track is not None:
                i, t_start, slew = track
                j = min(max(int(math.floor((t - t_start) / self.setup.dt + 1e-9)), 0), len(slew.times) - 1)
                att[i] = slew.attitudes[j]
                rate[i] = slew.rates[j]
            rec.times.append(float(t))
            rec.positions.append(positions[n, :4].copy())
            rec.attitudes.append(att)
            rec.rates.append(rate)
            rec.modes.append(codes)
            rec.spines.append(self.spines.copy())
            rec.propellant.append(np.array([p.remaining_mass for p in self.propellant]))
            rec.centers.append(positions[n, :4].mean(axis=0))
            rec.tensions.append(tens[n].copy())

    def flush(self) -> None:
        """Record any sample due at the current time."""
        self._advance(0.0)


# ---------------------------------------------------------------------------
# Hop step
# ---------------------------------------------------------------------------


def _trial_flight(state: ClimbState, i: int, *, thrust_vec=None, burn=0.0, velocity=None, wait=0.0, max_time=60.0):
    pos = state.pos.copy()
    vel = state.vel.copy()
    if wait > 0.0:
        # everything held while the mover slews; only the junction evolves
        state._advance(wait, record=False, pos=pos, vel=vel)
    pinned = state.pinned
    state.pinned = pinned.copy()
    state.pinned[i] = False
    if velocity is not None:
        vel[i] = velocity
    try:
        status, _, _ = state._advance(max_time, mb.UNTIL_TOUCHDOWN, i, thrust_vec, burn, record=False, pos=pos, vel=vel)
    finally:
        state.pinned = pinned
    if status != mb.TOUCHDOWN:
        return None
    return pos[i]


def _aim(state: ClimbState, i: int, target: np.ndarray, launch, iters: int = 20, tol: float = 1e-7, wait: float = 0.0):
    """Shooting loop: move the in-plane aim point until the trial landing hits ``target``.

    Broyden updates of the 2x2 landing Jacobian; the best iterate is kept.
    """
    aim = target[:2].copy()
    jac = np.eye(2)
    best, best_miss = None, math.inf
    prev = None
    for _ in range(iters):
        goal = np.array([aim[0], aim[1], target[2]])
        sol = launch(goal - state.pos[i])
        land = _trial_flight(state, i, wait=wait, **sol["trial"])
        if land is None:
            break
        miss = (land - target)[:2]
        err = float(np.linalg.norm(miss))
        if err < best_miss:
            best, best_miss = sol, err
        if err < tol:
            break
        if prev is not None:
            dx, df = aim - prev[0], miss - prev[1]
            denom = float(dx @ dx)
            if denom > 0.0:
                jac += np.outer(df - jac @ dx, dx) / denom
        prev = (aim.copy(), miss)
        try:
            step = np.linalg.solve(jac, miss)
        except np.linalg.LinAlgError:
            step = miss
        aim = aim - step
    if best is None:
        raise ClimbAbortedError(f"robot {i + 1}: no ballistic solution reaches the target")
    best["miss"] = best_miss
    return best


def _refine_burn(state: ClimbState, i: int, target: np.ndarray, thrust_vec, burn: float, iters: int = 12) -> float:
    """Secant search on burn time alone, thrust direction fixed by the actual attitude."""
    track = (target - state.pos[i])[:2]
    track /= np.linalg.norm(track)

    def along(tb):
        land = _trial_flight(state, i, thrust_vec=thrust_vec, burn=tb)
        return None if land is None else float((land - target)[:2] @ track)

    t0, f0 = burn, along(burn)
    if f0 is None:
        return burn
    t1 = burn * (1.0 - 1e-3)
    best_t, best_f = t0, abs(f0)
    for _ in range(iters):
        f1 = along(t1)
        if f1 is None:
            break
        if abs(f1) < best_f:
            best_t, best_f = t1, abs(f1)
        if abs(f1) < 1e-9 or f1 == f0:
            break
        t0, t1, f0 = t1, t1 - f1 * (t1 - t0) / (f1 - f0), f1
        if t1 <= 0.0:
            break
    return best_t


def _propulsive_launch(state: ClimbState, i: int):
    s = state.setup
    accel = thrust(s.thruster) / state._robot_mass[i]
    force = thrust(s.thruster)

    def launch(delta):
        u, tb = burn_solution(delta, s.gravity_vector, accel, s.flight_time)
        return {"u": u, "burn": tb, "trial": {"thrust_vec": force * u, "burn": tb}}

    return launch


def _wheel_launch(state: ClimbState, i: int):
    s = state.setup
    g_vec = s.gravity_vector

    def launch(delta):
        flight = math.sqrt(2.0 * np.linalg.norm(delta) / s.gravity)
        v0 = (delta - 0.5 * g_vec * flight * flight) / flight
        return {"velocity": v0, "trial": {"velocity": v0}}

    return launch


def _plan_slew(state: ClimbState, i: int, euler):
    s = state.setup
    return slew_to(euler, state.attitude[i], state.rate[i], s.wheels(state.wheel_speeds[i]), s.gains, s.body_inertia,
                   s.slew_timeout, s.dt, s.slew_angle_tol, s.slew_rate_tol)


def _commit_slew(state: ClimbState, i: int, res, euler) -> None:
    if not res.settled:
        state.log(i + 1, "slew_timeout", f"target {euler[0]:.6f},{euler[1]:.6f},{euler[2]:.6f}")
    if res.saturated:
        state.log(i + 1, "wheel_saturation", "")
    if res.duration > 0.0:
        state._advance(res.duration, track=(i, state.time, res))
    state.attitude[i] = res.attitude
    state.rate[i] = res.rate
    state.wheel_speeds[i] = res.wheel_speed


def _slew_and_aim(state: ClimbState, i: int, target: np.ndarray, launch, passes: int = 6):
    """Slew to the burn attitude, aiming from the world as it will be once the slew ends.

    The slew itself only depends on attitude, so it is planned first and the
    junction is propagated over its duration before shooting. A few passes
    reach a consistent (attitude, duration) pair.
    """
    sol = _aim(state, i, target, launch)
    euler = burn_attitude(sol["u"])
    res = _plan_slew(state, i, euler)
    for _ in range(passes):
        nxt = _aim(state, i, target, launch, wait=res.duration)
        new_euler = burn_attitude(nxt["u"])
        sol = nxt
        if max(abs(a - b) for a, b in zip(new_euler, euler)) < state.setup.slew_angle_tol:
            break
        euler = new_euler
        res = _plan_slew(state, i, euler)
    _commit_slew(state, i, res, euler)
    return sol


def _hop_to(state: ClimbState, i: int, target: np.ndarray, plan: ClimbPlan) -> np.ndarray:
    """Slew, launch and fly robot ``i`` towards ``target``; returns the touchdown point."""
    s = state.setup
    state.attempts += 1
    if state.hop_mode == PROPULSIVE:
        sol = _slew_and_aim(state, i, target, _propulsive_launch(state, i))
        try:
            state.propellant[i] = consume_hop(state.propellant[i], s.thruster)
        except PropellantExhaustedError:
            state.log(i + 1, "propellant_exhausted", f"{state.propellant[i].remaining_mass * 1e3:.3f} g left")
            raise
        body_z = quat_rotate(state.attitude[i], np.array([0.0, 0.0, 1.0]))
        thrust_vec = thrust(s.thruster) * body_z
        burn = _refine_burn(state, i, target, thrust_vec, sol["burn"])
        state.set_mode(i, RobotMode.HOPPING)
        state.log(i + 1, "ignition", f"burn {burn:.6f} s")
    else:
        dist = float(np.linalg.norm(target - state.pos[i]))
        hop_mode_select(s.gravity, REACTION_WHEEL, s.mode_threshold, max(dist, 1e-9), s.platform(), s.wheels())
        sol = _aim(state, i, target, _wheel_launch(state, i))
        state.vel[i] = sol["velocity"]
        thrust_vec, burn = None, 0.0
        state.set_mode(i, RobotMode.HOPPING)
        state.log(i + 1, "wheel_brake_launch", f"v0 {np.linalg.norm(sol['velocity']):.6f} m/s")
    state.pinned[i] = False
    t_launch = state.time
    status, _, _ = state._advance(120.0, mb.UNTIL_TOUCHDOWN, i, thrust_vec, burn)
    if status != mb.TOUCHDOWN:
        raise ClimbAbortedError(f"robot {i + 1} never came back to the surface")
    land = state.pos[i].copy()
    miss = float(np.linalg.norm((land - target)[:2]))
    state.log(i + 1, "touchdown", f"flight {state.time - t_launch:.6f} s miss {miss:.6f} m")
    if miss > s.landing_tolerance:
        state.log(i + 1, "landing_outside_tolerance", f"{miss:.6f} m")
    return land


def _anchored_capacity(state: ClimbState, exclude: int) -> float:
    cap = state.setup.grip.capacity
    return float(sum(state.spines[j] * cap for j in range(4) if j != exclude and state.modes[j] == RobotMode.ANCHORED))


def execute_hop_step(state: ClimbState, robot: int, plan: ClimbPlan, rng: np.random.Generator | None = None):
    """Move one robot (1-based id) ``plan.hop_distance`` up-slope, retrying failed grips.

    Returns ``(state, events)`` where events are those logged by this step.
    """
    s = state.setup
    rng = state.rng if rng is None else rng
    i = robot - 1
    first_event = len(state.events)
    if plan.hop_distance == 0.0:
        state.log(robot, "noop_hop", "hop distance is zero")
        return state, state.events[first_event:]
    if any(m != RobotMode.ANCHORED for m in state.modes):
        raise ClimbError(f"robot {robot} cannot hop: not every robot is anchored")
    state.hops[i] += 1
    state.hop_steps += 1
    hop_no = int(state.hops[i])
    anchor = state.pos[i].copy()
    target = anchor + plan.hop_distance * s.terrain.upslope
    target[2] = 0.0
    start_time = state.time
    fuel_start = state.propellant_used
    retries = 0
    while True:
        state.set_mode(i, RobotMode.RELEASING if retries == 0 else RobotMode.RECOVERING)
        land = _hop_to(state, i, target, plan)
        state.set_mode(i, RobotMode.GRIP_ATTEMPT)
        if retries == 0 and (robot, hop_no) in s.forced_failures:
            engaged, spines, why = False, 0, "scripted"
        else:
            out = attempt_grip(s.grip, s.terrain, rng, s.share_load)
            engaged, spines, why = out.engaged, out.spines, "random"
        if engaged:
            state.pos[i] = land
            state.vel[i] = 0.0
            state.pinned[i] = True
            state.spines[i] = spines
            state.log(robot, "grip_engaged", f"{spines} spines")
            state.set_mode(i, RobotMode.ANCHORED)
            state._advance(s.settle_time)
            break
        state.failures += 1
        state.spines[i] = 0
        state.log(robot, "grip_failure", why)
        capacity = _anchored_capacity(state, i)
        state.set_mode(i, RobotMode.SLIPPING)
        if capacity < s.slope_load:
            state.log(0, "system_slip", f"capacity {capacity:.3f} N < load {s.slope_load:.3f} N")
            raise SystemSlipError(f"anchored capacity {capacity:.3f} N cannot hold slope load {s.slope_load:.3f} N")
        y_start = float(state.pos[i, 1])
        status, aux, _ = state._advance(s.max_slip_time, mb.UNTIL_ARREST, i)
        if status != mb.ARRESTED:
            raise ClimbAbortedError(f"robot {robot} did not come to rest within {s.max_slip_time} s")
        excursion = y_start - float(aux[mb.AUX_MIN_Y])
        state.max_excursion = max(state.max_excursion, excursion)
        state.set_mode(i, RobotMode.ARRESTED)
        state.log(robot, "tether_arrest", f"excursion {excursion:.6f} m peak tension {aux[mb.AUX_MAX_TENSION]:.3f} N")
        state.pinned[i] = True
        state.vel[i] = 0.0
        retries += 1
        if retries > plan.max_retries:
            state.log(robot, "climb_aborted", f"{retries - 1} retries exhausted")
            raise ClimbAbortedError(f"robot {robot} failed to grip after {plan.max_retries} retries")
    state.hop_log.append({
        "robot": robot, "hop": hop_no, "retries": retries, "start": start_time, "end": state.time,
        "anchor": anchor, "target": target, "landing": state.pos[i].copy(),
        "propellant": state.propellant_used - fuel_start,
    })
    return state, state.events[first_event:]


def run_climb(plan: ClimbPlan, setup: ClimbSetup = ClimbSetup(), seed: int | None = None):
    """Run ``plan.cycles`` passes over ``plan.order``.

    Returns ``(state, record, events)``. Errors carry ``state`` and ``record``
    with the progress made before they were raised.
    """
    if seed is not None:
        setup = replace(setup, grip=replace(setup.grip, seed=seed))
    state = ClimbState(setup)
    state.log(0, "start", f"mode {state.hop_mode}")
    try:
        for cycle in range(plan.cycles):
            for robot in plan.order:
                execute_hop_step(state, robot, plan)
            state.log(0, "cycle_complete", str(cycle + 1))
    except (ClimbError, PropellantExhaustedError) as exc:
        state.flush()
        exc.state = state
        exc.record = state.record
        raise
    state.flush()
    state.log(0, "finish", "")
    return state, state.record, state.events
