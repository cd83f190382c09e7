"""Scenario configuration: domain parameters, JSON loading and validation.

Everything is stored in SI units (m, kg, s, N, rad). The defaults reproduce
the reference platform: a 1008 g quadrotor carrying a 102 g slewing ring and
a 508 g suspended pod, perching on a 73.2 mm branch.

Parameters with no published value (prop-guard radius, pod bounding box,
thrust limits, spool core, winch speed, tether length) are engineering
estimates; see README.md for the full list.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

STRATEGIES = (
    "duo_perch",
    "solo_perch",
    "duo_disentangle_winding",
    "duo_disentangle_propeller",
    "solo_disentangle",
)

ENERGY_MODES = ("table", "integrated")


class ScenarioError(ValueError):
    """Raised when a scenario file cannot be parsed or fails validation."""

    def __init__(self, message: str, violations: list[Violation] | None = None):
        super().__init__(message)
        self.violations = violations or []


@dataclass(frozen=True)
class Violation:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


@dataclass(frozen=True)
class BranchSpec:
    diameter: float = 0.0732
    incline_angle: float = 0.0
    center_height: float = 10.0
    friction_coeff: float = 0.18

    @property
    def radius(self) -> float:
        return 0.5 * self.diameter


@dataclass(frozen=True)
class TetherSpec:
    total_length: float = 3.0
    diameter: float = 0.001
    linear_density: float = 0.001


@dataclass(frozen=True)
class VehicleSpec:
    drone_mass: float = 1.008
    pod_mass: float = 0.508
    ring_mass: float = 0.102
    drone_max_thrust: float = 30.0
    pod_max_thrust: float = 10.0
    # estimates: F450 with guards, pod bounding box
    drone_body_radius: float = 0.30
    pod_length: float = 0.20
    pod_width: float = 0.12

    @property
    def drone_side_mass(self) -> float:
        """Mass hanging on the drone end of the tether (drone plus ring)."""
        return self.drone_mass + self.ring_mass

    @property
    def total_mass(self) -> float:
        return self.drone_mass + self.pod_mass + self.ring_mass

    @property
    def pod_half_diagonal(self) -> float:
        return 0.5 * math.hypot(self.pod_length, self.pod_width)


@dataclass(frozen=True)
class ControllerGains:
    """PD gains, shared by the waypoint and orbit controllers (per unit mass)."""

    kp: float = 4.0
    kd: float = 4.0
    orbit_speed: float = 0.6
    orbit_kv: float = 3.0
    orbit_kr: float = 6.0


@dataclass(frozen=True)
class SpoolConfig:
    core_radius: float = 0.010
    spool_width: float = 0.020
    max_turns: int = 60
    winch_rate_max: float = 0.15
    winch_max_tension: float = 40.0


@dataclass(frozen=True)
class StabilityConfig:
    angle_sensitivity: float = 0.15
    critical_single_loop_angle: float = math.radians(30.0)


@dataclass(frozen=True)
class PowerConfig:
    """Per-vehicle power model parameters (see :mod:`tensile_perch.energy`)."""

    drone_reference_mass: float = 1.618
    drone_reference_power: float = 180.0
    pod_reference_mass: float = 0.508
    pod_reference_power: float = 90.0
    mass_exponent: float = 1.5
    avionics_power: float = 0.0
    motor_efficiency: float = 1.0
    battery_voltage: float = 14.8


@dataclass(frozen=True)
class CostConfig:
    """Measured maneuver charges in mAh."""

    first_loop: float = 60.0
    second_loop: float = 49.0
    pod_propeller_disentangle: float = 11.0
    winding_disentangle: float = 0.73


@dataclass(frozen=True)
class MissionConfig:
    """Strategy-level knobs that the reference platform leaves implicit."""

    start_x: float = 1.0
    start_y: float = 1.2
    initial_released: float = 0.6
    perch_loops: int = 2
    winch_enabled: bool = True
    energy_accounting: str = "table"
    clearance: float = 0.05


@dataclass(frozen=True)
class ScenarioConfig:
    branch: BranchSpec = field(default_factory=BranchSpec)
    tether: TetherSpec = field(default_factory=TetherSpec)
    vehicles: VehicleSpec = field(default_factory=VehicleSpec)
    gravity: float = 9.81
    timestep: float = 0.001
    max_sim_time: float = 120.0
    strategy: str = "duo_perch"
    controller_gains: ControllerGains = field(default_factory=ControllerGains)
    seed: int = 0
    linear_damping: float = 0.05
    spool: SpoolConfig = field(default_factory=SpoolConfig)
    stability: StabilityConfig = field(default_factory=StabilityConfig)
    power: PowerConfig = field(default_factory=PowerConfig)
    costs: CostConfig = field(default_factory=CostConfig)
    mission: MissionConfig = field(default_factory=MissionConfig)

    def replace(self, **changes: Any) -> ScenarioConfig:
        """Return a copy with dotted-path overrides, e.g. ``vehicles.pod_mass=0.3``."""
        data = to_dict(self)
        for key, value in changes.items():
            set_path(data, key.replace("__", "."), value)
        return from_dict(data)


def _is_dataclass_type(tp: Any) -> bool:
    return isinstance(tp, type) and dataclasses.is_dataclass(tp)


def _resolve_types(cls: type) -> dict[str, Any]:
    import typing

    return typing.get_type_hints(cls)


def _coerce(value: Any, tp: Any, path: str) -> Any:
    if tp is bool:
        if not isinstance(value, bool):
            raise ScenarioError(f"{path}: expected boolean", [Violation(path, "expected boolean")])
        return value
    if tp is int:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ScenarioError(f"{path}: expected integer", [Violation(path, "expected integer")])
        return value
    if tp is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"{path}: expected number", [Violation(path, "expected number")])
        return float(value)
    if tp is str:
        if not isinstance(value, str):
            raise ScenarioError(f"{path}: expected string", [Violation(path, "expected string")])
        return value
    return value


def _build(cls: type, data: Mapping[str, Any], prefix: str) -> Any:
    if not isinstance(data, Mapping):
        raise ScenarioError(f"{prefix or '<root>'}: expected object",
                            [Violation(prefix or "<root>", "expected object")])
    hints = _resolve_types(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        violations = [Violation(_join(prefix, k), "unknown key") for k in unknown]
        raise ScenarioError("; ".join(map(str, violations)), violations)
    kwargs = {}
    for name in names & set(data):
        tp = hints[name]
        path = _join(prefix, name)
        if _is_dataclass_type(tp):
            kwargs[name] = _build(tp, data[name], path)
        else:
            kwargs[name] = _coerce(data[name], tp, path)
    return cls(**kwargs)


def _join(prefix: str, name: str) -> str:
    return f"{prefix}.{name}" if prefix else name


def from_dict(data: Mapping[str, Any]) -> ScenarioConfig:
    """Build a config from a (possibly partial) mapping, filling defaults."""
    return _build(ScenarioConfig, data, "")


def to_dict(config: Any) -> dict[str, Any]:
    return dataclasses.asdict(config)


def set_path(data: dict[str, Any], path: str, value: Any) -> None:
    parts = path.split(".")
    node = data
    for part in parts[:-1]:
        if part not in node or not isinstance(node[part], dict):
            raise KeyError(path)
        node = node[part]
    if parts[-1] not in node:
        raise KeyError(path)
    node[parts[-1]] = value


def get_path(config: ScenarioConfig, path: str) -> Any:
    node: Any = config
    for part in path.split("."):
        if not dataclasses.is_dataclass(node) or not hasattr(node, part):
            raise KeyError(path)
        node = getattr(node, part)
    return node


def validate(config: ScenarioConfig) -> list[Violation]:
    """Return every violated invariant (empty list means valid)."""
    out: list[Violation] = []

    def check(ok: bool, path: str, message: str) -> None:
        if not ok:
            out.append(Violation(path, message))

    b, t, v = config.branch, config.tether, config.vehicles
    check(b.diameter > 0, "branch.diameter", "must be > 0")
    check(0 <= b.incline_angle < math.pi / 2, "branch.incline_angle", "must lie in [0, pi/2)")
    check(b.friction_coeff >= 0, "branch.friction_coeff", "must be >= 0")
    check(t.total_length > 0, "tether.total_length", "must be > 0")
    check(t.diameter > 0, "tether.diameter", "must be > 0")
    check(t.linear_density >= 0, "tether.linear_density", "must be >= 0")
    for name in ("drone_mass", "pod_mass", "ring_mass"):
        check(getattr(v, name) > 0, f"vehicles.{name}", "must be > 0")
    check(v.drone_max_thrust > v.total_mass * config.gravity, "vehicles.drone_max_thrust",
          "drone cannot hover the full system (hover capability)")
    check(v.pod_max_thrust >= 0, "vehicles.pod_max_thrust", "must be >= 0")
    check(v.drone_body_radius > 0, "vehicles.drone_body_radius", "must be > 0")
    check(v.pod_length > 0 and v.pod_width > 0, "vehicles.pod_length", "pod dimensions must be > 0")
    check(config.gravity > 0, "gravity", "must be > 0")
    check(config.timestep > 0, "timestep", "must be > 0")
    check(config.max_sim_time > config.timestep, "max_sim_time", "must exceed timestep")
    check(config.strategy in STRATEGIES, "strategy", f"must be one of {', '.join(STRATEGIES)}")
    check(config.linear_damping >= 0, "linear_damping", "must be >= 0")

    s = config.spool
    check(s.core_radius > 0, "spool.core_radius", "must be > 0")
    check(s.spool_width >= t.diameter, "spool.spool_width", "must hold at least one turn per layer")
    check(s.max_turns >= 1, "spool.max_turns", "must be >= 1")
    check(s.winch_rate_max >= 0, "spool.winch_rate_max", "must be >= 0")
    check(s.winch_max_tension > 0, "spool.winch_max_tension", "must be > 0")

    st = config.stability
    check(st.angle_sensitivity >= 0, "stability.angle_sensitivity", "must be >= 0")
    check(0 < st.critical_single_loop_angle <= math.pi / 2, "stability.critical_single_loop_angle",
          "must lie in (0, pi/2]")

    p = config.power
    check(p.drone_reference_mass > 0 and p.pod_reference_mass > 0, "power.drone_reference_mass",
          "reference masses must be > 0")
    check(p.drone_reference_power > 0 and p.pod_reference_power > 0, "power.drone_reference_power",
          "reference powers must be > 0")
    check(p.mass_exponent > 0, "power.mass_exponent", "must be > 0")
    check(0 < p.motor_efficiency <= 1, "power.motor_efficiency", "must lie in (0, 1]")
    check(p.battery_voltage > 0, "power.battery_voltage", "must be > 0")
    check(p.avionics_power >= 0, "power.avionics_power", "must be >= 0")

    for name in ("first_loop", "second_loop", "pod_propeller_disentangle", "winding_disentangle"):
        check(getattr(config.costs, name) >= 0, f"costs.{name}", "must be >= 0")

    m = config.mission
    check(m.perch_loops >= 1, "mission.perch_loops", "must be >= 1")
    check(m.energy_accounting in ENERGY_MODES, "mission.energy_accounting",
          f"must be one of {', '.join(ENERGY_MODES)}")
    check(m.clearance >= 0, "mission.clearance", "must be >= 0")
    check(0 <= m.initial_released <= t.total_length, "mission.initial_released",
          "must lie in [0, tether.total_length]")
    check(math.hypot(m.start_x, m.start_y) > b.radius, "mission.start_x",
          "start position lies inside the branch")
    return out


def check_valid(config: ScenarioConfig) -> ScenarioConfig:
    violations = validate(config)
    if violations:
        raise ScenarioError("; ".join(map(str, violations)), violations)
    return config


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Load and validate a JSON scenario file; omitted fields take defaults."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: malformed JSON ({exc})") from exc
    return check_valid(from_dict(data))


def save_scenario(config: ScenarioConfig, path: str | Path) -> None:
    Path(path).write_text(dumps(config), encoding="utf-8")


def dumps(config: ScenarioConfig) -> str:
    return json.dumps(to_dict(config), indent=2, sort_keys=True) + "\n"


_JSON_TYPES = {float: "number", int: "integer", str: "string", bool: "boolean"}


def schema(cls: type = ScenarioConfig) -> dict[str, Any]:
    """JSON-schema description of the scenario file format, with defaults."""
    hints = _resolve_types(cls)
    default = cls()
    props: dict[str, Any] = {}
    for f in dataclasses.fields(cls):
        tp = hints[f.name]
        if _is_dataclass_type(tp):
            props[f.name] = schema(tp)
        else:
            entry: dict[str, Any] = {"type": _JSON_TYPES[tp], "default": getattr(default, f.name)}
            if f.name == "strategy":
                entry["enum"] = list(STRATEGIES)
            if f.name == "energy_accounting":
                entry["enum"] = list(ENERGY_MODES)
            props[f.name] = entry
    return {"type": "object", "additionalProperties": False, "properties": props}
