"""Scenario files: a strict YAML schema over :class:`ClimbSetup` and :class:`ClimbPlan`.

Every section and key is optional; missing values take the library defaults.
Unknown sections or keys are errors. Angles may be given in radians
(``slope``) or degrees (``slope_deg``) but not both.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

import yaml

from .adcs import ControllerGains
from .coordinator import ClimbPlan, ClimbSetup, InfeasibleHopModeError, hop_mode_select
from .simcore import MARS, PHOBOS
from .tether import TetherConfigError, assemble_x_network

NAMED_GRAVITY = {"mars": MARS.gravity_magnitude, "phobos": PHOBOS.gravity_magnitude}


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class OutputPaths:
    directory: str = "out"
    trajectory: str = "trajectory.csv"
    events: str = "events.txt"
    summary: str = "summary.txt"


@dataclass(frozen=True)
class Scenario:
    setup: ClimbSetup = field(default_factory=ClimbSetup)
    plan: ClimbPlan = field(default_factory=ClimbPlan)
    output: OutputPaths = field(default_factory=OutputPaths)


# (section, key) -> (owner, attribute, kind). Owners: setup, terrain, thruster,
# tether, grip, plan, gains, output.
_SCHEMA = {
    "environment": {"gravity": ("setup", "gravity", "gravity")},
    "terrain": {
        "slope": ("terrain", "slope", "angle"),
        "friction": ("terrain", "friction", "float"),
        "asperity_radius": ("terrain", "asperity_radius", "float"),
        "asperity_density": ("terrain", "asperity_density", "float"),
    },
    "robot": {
        "mass": ("setup", "robot_mass", "float"),
        "radius": ("setup", "robot_radius", "float"),
        "body_inertia": ("setup", "body_inertia", "float"),
        "spike_length": ("setup", "spike_length", "float"),
        "propellant_mass": ("setup", "propellant_mass", "float"),
    },
    "thruster": {name: ("thruster", name, "float") for name in (
        "chamber_pressure", "throat_area", "exit_pressure", "specific_heat_ratio", "burn_duration", "propellant_per_hop")},
    "wheels": {
        "inertia": ("setup", "wheel_inertia", "float"),
        "max_torque": ("setup", "wheel_max_torque", "float"),
        "max_speed": ("setup", "wheel_max_speed", "float"),
    },
    "controller": {"kp": ("gains", "kp", "vec3"), "kd": ("gains", "kd", "vec3")},
    "spines": {"count": ("grip", "spine_count", "int"), "capacity": ("grip", "capacity", "float")},
    "grip": {"p_grip": ("grip", "p_grip", "float"), "seed": ("grip", "seed", "int")},
    "tether": {
        "stiffness": ("tether", "stiffness", "float"),
        "damping": ("tether", "damping", "float"),
        "rest_length": ("tether", "rest_length", "float"),
        "mass": ("tether", "mass", "float"),
        "breaking_load": ("tether", "breaking_load", "optional_float"),
        "topology": ("setup", "topology", "str"),
        "pretension": ("setup", "pretension", "bool"),
    },
    "plan": {
        "hop_distance": ("plan", "hop_distance", "float"),
        "order": ("plan", "order", "order"),
        "cycles": ("plan", "cycles", "int"),
        "max_retries": ("plan", "max_retries", "int"),
    },
    "hop_mode": {"mode": ("setup", "hop_mode", "str"), "threshold": ("setup", "mode_threshold", "float")},
    "simulation": {name: ("setup", name, "float") for name in (
        "dt", "sample_rate", "flight_time", "settle_time", "landing_tolerance", "arrest_speed", "arrest_hold",
        "max_slip_time", "initial_settle", "contact_stiffness", "contact_damping_ratio", "creep_velocity",
        "slew_angle_tol", "slew_rate_tol", "slew_timeout")},
    "formation": {
        "initial_positions": ("setup", "initial_positions", "positions"),
        "forced_failures": ("setup", "forced_failures", "pairs"),
    },
    "output": {name: ("output", name, "str") for name in ("directory", "trajectory", "events", "summary")},
}


def _where(section, key):
    return f"{section}.{key}"


def _number(value, where):
    if isinstance(value, bool):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    if isinstance(value, str):
        try:
            return float(value)  # YAML 1.1 reads 1e-3 as a string
        except ValueError:
            pass
    raise ScenarioError(f"{where}: expected a number, got {value!r}")


def _convert(kind, value, where):
    if kind == "float":
        return _number(value, where)
    if kind == "optional_float":
        return None if value is None else _number(value, where)
    if kind == "angle":
        return _number(value, where)
    if kind == "gravity":
        if isinstance(value, str) and value.lower() in NAMED_GRAVITY:
            return NAMED_GRAVITY[value.lower()]
        return _number(value, where)
    if kind == "int":
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"{where}: expected an integer, got {value!r}")
        return value
    if kind == "bool":
        if not isinstance(value, bool):
            raise ScenarioError(f"{where}: expected true or false, got {value!r}")
        return value
    if kind == "str":
        if not isinstance(value, str):
            raise ScenarioError(f"{where}: expected a string, got {value!r}")
        return value
    if kind == "vec3":
        if not isinstance(value, (list, tuple)) or len(value) != 3:
            raise ScenarioError(f"{where}: expected three numbers")
        return tuple(_number(v, where) for v in value)
    if kind == "order":
        if not isinstance(value, (list, tuple)) or not all(isinstance(v, int) and not isinstance(v, bool) for v in value):
            raise ScenarioError(f"{where}: expected a list of robot ids")
        return tuple(value)
    if kind == "positions":
        if not isinstance(value, (list, tuple)) or len(value) != 4:
            raise ScenarioError(f"{where}: expected four [x, y, z] positions")
        out = []
        for p in value:
            if not isinstance(p, (list, tuple)) or len(p) != 3:
                raise ScenarioError(f"{where}: expected four [x, y, z] positions")
            out.append(tuple(_number(v, where) for v in p))
        return tuple(out)
    if kind == "pairs":
        if not isinstance(value, (list, tuple)):
            raise ScenarioError(f"{where}: expected a list of [robot, hop] pairs")
        out = []
        for p in value:
            if (not isinstance(p, (list, tuple)) or len(p) != 2
                    or not all(isinstance(v, int) and not isinstance(v, bool) for v in p)):
                raise ScenarioError(f"{where}: expected a list of [robot, hop] pairs")
            if not 1 <= p[0] <= 4 or p[1] < 1:
                raise ScenarioError(f"{where}: robot ids are 1-4 and hop numbers start at 1, got {list(p)}")
            out.append((p[0], p[1]))
        return tuple(out)
    raise AssertionError(kind)


def scenario_from_dict(data) -> Scenario:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping of sections")
    parts = {k: {} for k in ("setup", "terrain", "thruster", "tether", "grip", "plan", "gains", "output")}
    for section, body in data.items():
        if section not in _SCHEMA:
            raise ScenarioError(f"unknown section {section!r}; expected one of {', '.join(_SCHEMA)}")
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ScenarioError(f"section {section!r} must be a mapping")
        keys = _SCHEMA[section]
        for key, value in body.items():
            name = key[:-4] if isinstance(key, str) and key.endswith("_deg") else key
            spec = keys.get(name)
            if spec is None or (name != key and spec[2] != "angle"):
                raise ScenarioError(f"unknown key {_where(section, key)}")
            owner, attr, kind = spec
            if attr in parts[owner]:
                raise ScenarioError(f"{_where(section, name)} given twice (radians and degrees)")
            v = _convert(kind, value, _where(section, key))
            if name != key:
                v = math.radians(v)
            parts[owner][attr] = v
    d = ClimbSetup()
    try:
        gains = parts["gains"]
        setup_kw = dict(parts["setup"])
        setup_kw["terrain"] = dataclasses.replace(d.terrain, **parts["terrain"])
        setup_kw["thruster"] = dataclasses.replace(d.thruster, **parts["thruster"])
        setup_kw["tether"] = dataclasses.replace(d.tether, **parts["tether"])
        setup_kw["grip"] = dataclasses.replace(d.grip, **parts["grip"])
        if gains:
            setup_kw["gains"] = ControllerGains(gains.get("kp", d.gains.kp), gains.get("kd", d.gains.kd))
        setup = ClimbSetup(**setup_kw)
        plan = ClimbPlan(**parts["plan"])
        output = OutputPaths(**parts["output"])
    except ValueError as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from exc
    scenario = Scenario(setup, plan, output)
    validate_scenario(scenario)
    return scenario


def validate_scenario(scenario: Scenario) -> None:
    """Cross-module checks that no single constructor can make."""
    s = scenario.setup
    try:
        assemble_x_network(s.initial_positions, s.tether, s.topology, s.pretension)
        hop_mode_select(s.gravity, s.hop_mode, s.mode_threshold, max(scenario.plan.hop_distance, 1e-9),
                        s.platform(), s.wheels())
    except (TetherConfigError, InfeasibleHopModeError, ValueError) as exc:
        raise ScenarioError(f"invalid scenario: {exc}") from exc


def loads_scenario(text: str, source: str = "<string>") -> Scenario:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        raise ScenarioError(f"{source}: cannot parse{where}: {getattr(exc, 'problem', exc)}") from exc
    return scenario_from_dict(data)


def load_scenario(path) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return loads_scenario(fh.read(), str(path))


def _value(owner_obj, attr):
    v = getattr(owner_obj, attr)
    if isinstance(v, tuple):
        return [list(x) if isinstance(x, tuple) else x for x in v]
    return v


def scenario_to_dict(scenario: Scenario) -> dict:
    s = scenario.setup
    owners = {
        "setup": s, "terrain": s.terrain, "thruster": s.thruster, "tether": s.tether, "grip": s.grip,
        "plan": scenario.plan, "gains": s.gains, "output": scenario.output,
    }
    out = {}
    for section, keys in _SCHEMA.items():
        body = {}
        for key, (owner, attr, kind) in keys.items():
            v = _value(owners[owner], attr)
            if kind == "angle" and math.radians(math.degrees(v)) == v:
                body[key + "_deg"] = math.degrees(v)
            else:
                body[key] = v
        out[section] = body
    return out


def dumps_scenario(scenario: Scenario) -> str:
    return yaml.safe_dump(scenario_to_dict(scenario), sort_keys=False, default_flow_style=None)
