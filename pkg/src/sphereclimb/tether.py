"""Tension-only spring-damper tethers joining four robots in an "x".

The default topology has four spokes, one per robot, meeting at a junction
node that is integrated as a point mass. Attachments are at robot centres
so a tether only ever applies a force, never a moment (ball-and-socket).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

JUNCTION = 4  # body index of the junction node

SLACK, TAUT, DEGENERATE, BROKEN = 0, 1, 2, 3
_STATUS = {SLACK: "slack", TAUT: "taut", DEGENERATE: "degenerate", BROKEN: "broken"}


class TetherConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TetherSpec:
    stiffness: float = 500.0  # N/m
    damping: float = 20.0  # N s/m
    rest_length: float = 1.2  # m; floor on each link's rest length in a climb
    mass: float = 0.15  # kg per tether
    breaking_load: float | None = None  # N

    def __post_init__(self):
        if not self.stiffness > 0.0:
            raise ValueError("stiffness must be > 0")
        if self.damping < 0.0:
            raise ValueError("damping must be >= 0")
        if not self.rest_length > 0.0:
            raise ValueError("rest_length must be > 0")
        if self.mass < 0.0:
            raise ValueError("mass must be >= 0")
        if self.breaking_load is not None and not self.breaking_load > 0.0:
            raise ValueError("breaking_load must be > 0 when given")


@njit(cache=True)
def link_tension_kernel(pa, pb, va, vb, k, c, rest):
    """Returns (tension, unit vector a->b, separation, status code)."""
    dx = pb[0] - pa[0]
    dy = pb[1] - pa[1]
    dz = pb[2] - pa[2]
    s = math.sqrt(dx * dx + dy * dy + dz * dz)
    u = np.zeros(3)
    if s == 0.0:
        return 0.0, u, 0.0, DEGENERATE
    u[0] = dx / s
    u[1] = dy / s
    u[2] = dz / s
    if s <= rest:
        return 0.0, u, s, SLACK
    sdot = (vb[0] - va[0]) * u[0] + (vb[1] - va[1]) * u[1] + (vb[2] - va[2]) * u[2]
    t = k * (s - rest) + c * sdot
    if t < 0.0:
        t = 0.0
    return t, u, s, TAUT


def link_tension(p_a, p_b, v_a, v_b, spec: TetherSpec, rest_length: float | None = None):
    """Tension magnitude and status name of one link."""
    rest = spec.rest_length if rest_length is None else rest_length
    t, _, _, code = link_tension_kernel(
        np.asarray(p_a, float), np.asarray(p_b, float), np.asarray(v_a, float), np.asarray(v_b, float),
        spec.stiffness, spec.damping, rest,
    )
    if spec.breaking_load is not None and t > spec.breaking_load:
        code = BROKEN
    return t, _STATUS[code]


def tether_force(p_a, p_b, v_a, v_b, spec: TetherSpec, rest_length: float | None = None):
    """Equal and opposite tether forces ``(on a, on b)``.

    Slack and coincident endpoints both give zero force.
    """
    rest = spec.rest_length if rest_length is None else rest_length
    t, u, _, _ = link_tension_kernel(
        np.asarray(p_a, float), np.asarray(p_b, float), np.asarray(v_a, float), np.asarray(v_b, float),
        spec.stiffness, spec.damping, rest,
    )
    f_a = t * u
    return f_a, -f_a


@dataclass
class TetherNetwork:
    spec: TetherSpec
    links: np.ndarray  # (n, 2) body indices; 0-3 robots, 4 junction
    rest_lengths: np.ndarray
    junction_position: np.ndarray
    junction_velocity: np.ndarray
    junction_mass: float
    robot_lumped_mass: np.ndarray  # tether mass carried by each robot
    broken: np.ndarray = field(default=None)
    topology: str = "spokes"

    def __post_init__(self):
        if self.broken is None:
            self.broken = np.zeros(len(self.links), dtype=bool)

    @property
    def total_mass(self) -> float:
        return float(self.junction_mass + self.robot_lumped_mass.sum())

    def link_lengths(self, robot_positions) -> np.ndarray:
        pts = _bodies(robot_positions, self.junction_position)
        return np.linalg.norm(pts[self.links[:, 1]] - pts[self.links[:, 0]], axis=1)


def _bodies(robot_positions, junction):
    return np.vstack([np.asarray(robot_positions, float).reshape(4, 3), np.asarray(junction, float)])


def _diagonal_pairs(p: np.ndarray):
    # the pairing with the longest total length is the pair of crossing diagonals
    pairings = [((0, 1), (2, 3)), ((0, 2), (1, 3)), ((0, 3), (1, 2))]
    return max(pairings, key=lambda pr: sum(np.linalg.norm(p[a] - p[b]) for a, b in pr))


def assemble_x_network(
    robot_positions,
    spec: TetherSpec = TetherSpec(),
    topology: str = "spokes",
    pretension: bool = False,
    slack_floor: bool = False,
) -> TetherNetwork:
    """Build the tether network around four robots.

    Rest lengths equal the initial link lengths. ``pretension`` shortens them
    by 5 % so every link starts taut; ``slack_floor`` instead raises each to
    at least ``spec.rest_length``, leaving room for a robot to hop away.
    """
    p = np.asarray(robot_positions, dtype=float)
    if p.shape != (4, 3):
        raise TetherConfigError("exactly four robot positions are required")
    for i in range(4):
        for j in range(i + 1, 4):
            if np.linalg.norm(p[i] - p[j]) < 1e-9:
                raise TetherConfigError(f"robots {i + 1} and {j + 1} coincide")
    half = 0.5 * spec.mass
    if topology == "spokes":
        links = np.array([[i, JUNCTION] for i in range(4)])
        junction_mass = 4 * half
    elif topology == "diagonal":
        links = np.array(_diagonal_pairs(p))
        junction_mass = 0.0
    else:
        raise TetherConfigError(f"unknown tether topology {topology!r}")
    lumped = np.full(4, half)
    if topology == "diagonal":
        lumped = np.full(4, spec.mass)  # two tethers of double length
    junction = p.mean(axis=0)
    lengths = np.linalg.norm(_bodies(p, junction)[links[:, 1]] - _bodies(p, junction)[links[:, 0]], axis=1)
    rest = lengths.copy()
    if pretension:
        rest *= 0.95
    elif slack_floor:
        rest = np.maximum(rest, spec.rest_length)
    return TetherNetwork(spec, links, rest, junction, np.zeros(3), junction_mass, lumped, topology=topology)


@dataclass
class NetworkForces:
    robot_forces: np.ndarray  # (4, 3)
    junction_force: np.ndarray
    junction_acceleration: np.ndarray
    tensions: np.ndarray
    events: list


def network_forces(network: TetherNetwork, robot_positions, robot_velocities, junction_external=None) -> NetworkForces:
    """Tether forces on every body; links over their breaking load are removed."""
    pos = _bodies(robot_positions, network.junction_position)
    vel = _bodies(robot_velocities, network.junction_velocity)
    forces = np.zeros((5, 3))
    tensions = np.zeros(len(network.links))
    events = []
    spec = network.spec
    for n, (a, b) in enumerate(network.links):
        if network.broken[n]:
            continue
        t, u, _, code = link_tension_kernel(pos[a], pos[b], vel[a], vel[b], spec.stiffness, spec.damping, network.rest_lengths[n])
        if code == DEGENERATE:
            events.append(("degenerate_link", n))
        if spec.breaking_load is not None and t > spec.breaking_load:
            network.broken[n] = True
            events.append(("tether_failure", n))
            continue
        tensions[n] = t
        forces[a] += t * u
        forces[b] -= t * u
    jf = forces[JUNCTION].copy()
    if junction_external is not None:
        jf = jf + np.asarray(junction_external, float)
    acc = jf / network.junction_mass if network.junction_mass > 0.0 else np.zeros(3)
    return NetworkForces(forces[:4], forces[JUNCTION], acc, tensions, events)
