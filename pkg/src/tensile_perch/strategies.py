"""Perching and disentangling procedures as phase-sequenced state machines.

Each procedure drives the dynamics with per-phase controllers and records a
:class:`StrategyTrace`. Waypoint sequences are planar reconstructions of the
maneuvers: a "loop" is one full revolution of a vehicle round the branch,
laid on top of the initial half-turn drape, so a perched system with ``n``
loops has ``(2n + 1) * pi`` of tether in contact with the bark.

Energy is booked per phase either from the measured maneuver-cost table
(``table``, default) or by integrating electrical power from the simulated
thrust (``integrated``).
"""

from __future__ import annotations

import dataclasses
import enum
import json
import math
from dataclasses import dataclass, field
from typing import Callable

from tensile_perch import kernels
from tensile_perch.capstan import StabilityModel
from tensile_perch.dynamics import (
    ControlInput,
    InstabilityError,
    SystemState,
    airborne_state,
    hold_check,
    orbit_thrust,
    pd_thrust,
    perched_state,
    physics,
    reference_energy,
    step,
    tether_forces,
    tether_geometry,
)
from tensile_perch.energy import ManeuverCostTable, joules_to_mah, mah_to_joules
from tensile_perch.geometry import CriticalDistanceParams, circumnavigation_length, critical_distance
from tensile_perch.scenario import ScenarioConfig

TWO_PI = 2.0 * math.pi

# "stabilized": both speeds below this (m/s) and swing below SWING_LIMIT for SETTLE_TIME
SETTLE_SPEED = 0.05
SWING_LIMIT = math.radians(2.0)
SETTLE_TIME = 1.0

DEPART_SPEED = 0.5  # m/s along the departure ramp

STATE_CSV_HEADER = ("t", "drone_x", "drone_y", "pod_x", "pod_y", "wrap_angle", "spooled",
                    "taut", "tension")


class Outcome(str, enum.Enum):
    PERCHED = "PERCHED"
    AIRBORNE = "AIRBORNE"
    SLIPPED = "SLIPPED"
    TIMEOUT = "TIMEOUT"
    ABORTED = "ABORTED"


@dataclass
class StrategyPhase:
    name: str
    entered_at: float
    exit_condition: str
    exited_at: float | None = None
    charge_mah: dict[str, float] = field(default_factory=lambda: {"drone": 0.0, "pod": 0.0})
    energy_j: dict[str, float] = field(default_factory=lambda: {"drone": 0.0, "pod": 0.0})
    loops_at_exit: int | None = None


@dataclass
class StrategyTrace:
    strategy: str
    phases: list[StrategyPhase]
    outcome: Outcome
    final_loops: int
    total_energy: dict[str, float]
    final_state: SystemState
    hold: bool | None = None
    energy_accounting: str = "table"
    warnings: list[str] = field(default_factory=list)
    diagnostics: dict[str, float | str] = field(default_factory=dict)
    samples: list[tuple] = field(default_factory=list, repr=False)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "outcome": self.outcome.value,
            "final_loops": self.final_loops,
            "hold_check": self.hold,
            "energy_accounting": self.energy_accounting,
            "total_charge_mah": self.total_energy,
            "phases": [
                {
                    "name": p.name,
                    "entered_at": round(p.entered_at, 6),
                    "exited_at": None if p.exited_at is None else round(p.exited_at, 6),
                    "exit_condition": p.exit_condition,
                    "loops_at_exit": p.loops_at_exit,
                    "charge_mah": p.charge_mah,
                    "energy_j": p.energy_j,
                }
                for p in self.phases
            ],
            "warnings": self.warnings,
            "diagnostics": self.diagnostics,
            "final_time": round(self.final_state.time, 6),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


class _Stop(Exception):
    def __init__(self, outcome: Outcome, reason: str):
        super().__init__(reason)
        self.outcome = outcome
        self.reason = reason


Controller = Callable[[SystemState], ControlInput]
Predicate = Callable[[SystemState], bool]


class Mission:
    """Runs phases against the dynamics and books time, energy and samples."""

    def __init__(self, config: ScenarioConfig, state: SystemState, strategy: str,
                 decimation: float = 0.01):
        self.config = config
        self.ph = physics(config)
        self.state = state
        self.strategy = strategy
        self.phases: list[StrategyPhase] = []
        self.warnings: list[str] = []
        self.diagnostics: dict[str, float | str] = {}
        self.samples: list[tuple] = []
        self.table = ManeuverCostTable.from_config(config)
        self.mode = config.mission.energy_accounting
        self.energy_ref = reference_energy(state, config)
        self._decim_steps = max(1, int(round(decimation / config.timestep)))
        self._step_index = 0
        p = config.power
        self._power = {
            "drone": (p.drone_reference_power, p.drone_reference_mass),
            "pod": (p.pod_reference_power, p.pod_reference_mass),
        }
        self._last_power = self._powers(ControlInput(), state)
        self._sample(state)

    # -- energy -----------------------------------------------------------
    def _power_of(self, vehicle: str, thrust: float) -> float:
        p = self.config.power
        ref_power, ref_mass = self._power[vehicle]
        mech = ref_power * (thrust / (self.ph.g * ref_mass)) ** p.mass_exponent if thrust > 0 else 0.0
        return mech / p.motor_efficiency + p.avionics_power

    def _powers(self, control: ControlInput, state: SystemState) -> tuple[float, float]:
        td = math.hypot(*control.drone_thrust_vector) if state.drone_motors_on else 0.0
        tp = math.hypot(*control.pod_thrust_vector) if state.pod_motors_on else 0.0
        return (self._power_of("drone", min(td, self.ph.max_thrust_d)),
                self._power_of("pod", min(tp, self.ph.max_thrust_p)))

    def _sample(self, s: SystemState) -> None:
        self.samples.append((s.time, s.drone_pos[0], s.drone_pos[1], s.pod_pos[0], s.pod_pos[1],
                             s.wrap_angle, s.spooled_length, int(s.tether_taut),
                             max(s.tension_drone, s.tension_pod)))

    # -- phases -----------------------------------------------------------
    def set_motors(self, drone: bool | None = None, pod: bool | None = None) -> None:
        changes = {}
        if drone is not None:
            changes["drone_motors_on"] = drone
        if pod is not None:
            changes["pod_motors_on"] = pod
        self.state = dataclasses.replace(self.state, **changes)

    def run_phase(self, name: str, controller: Controller, done: Predicate, exit_condition: str,
                  table_charge: dict[str, float] | None = None,
                  monitor: Callable[[SystemState], None] | None = None) -> StrategyPhase:
        phase = StrategyPhase(name, self.state.time, exit_condition)
        self.phases.append(phase)
        voltage = self.config.power.battery_voltage
        dt = self.ph.dt
        e_d = e_p = 0.0
        completed = False
        try:
            # at least one step per phase keeps entry times strictly increasing
            while True:
                if self.state.time + dt > self.config.max_sim_time + 1e-9:
                    raise _Stop(Outcome.TIMEOUT, f"max_sim_time exceeded in {name}")
                control = controller(self.state)
                try:
                    self.state = step(self.state, control, self.config, energy_ref=self.energy_ref)
                except InstabilityError as exc:
                    raise _Stop(Outcome.ABORTED, str(exc)) from exc
                pw = self._powers(control, self.state)
                e_d += 0.5 * (pw[0] + self._last_power[0]) * dt
                e_p += 0.5 * (pw[1] + self._last_power[1]) * dt
                self._last_power = pw
                self._step_index += 1
                if self._step_index % self._decim_steps == 0:
                    self._sample(self.state)
                if monitor is not None:
                    monitor(self.state)
                if done(self.state):
                    break
            completed = True
        finally:
            phase.exited_at = self.state.time
            phase.loops_at_exit = self.state.loops
            if self.mode == "table":
                # an interrupted maneuver has no measured cost; book nothing
                charge = dict(table_charge or {}) if completed else {}
                phase.charge_mah = {"drone": charge.get("drone", 0.0), "pod": charge.get("pod", 0.0)}
                phase.energy_j = {k: mah_to_joules(v, voltage) for k, v in phase.charge_mah.items()}
            else:
                phase.energy_j = {"drone": e_d, "pod": e_p}
                phase.charge_mah = {k: joules_to_mah(v, voltage) for k, v in phase.energy_j.items()}
        return phase

    def finish(self, outcome: Outcome, hold: bool | None = None) -> StrategyTrace:
        if self.samples[-1][0] != self.state.time:
            self._sample(self.state)
        total = {"drone": 0.0, "pod": 0.0}
        for p in self.phases:
            for k in total:
                total[k] += p.charge_mah[k]
        return StrategyTrace(
            strategy=self.strategy, phases=self.phases, outcome=outcome,
            final_loops=self.state.loops, total_energy=total, final_state=self.state,
            hold=hold, energy_accounting=self.mode, warnings=self.warnings,
            diagnostics=self.diagnostics, samples=self.samples,
        )

    # -- helpers ----------------------------------------------------------
    @property
    def center(self) -> tuple[float, float]:
        return (self.ph.cx, self.ph.cy)

    def polar(self, pos) -> tuple[float, float]:
        rx, ry = pos[0] - self.ph.cx, pos[1] - self.ph.cy
        return math.hypot(rx, ry), math.atan2(ry, rx)

    def swing(self, s: SystemState, vehicle: str) -> float:
        """Angle of a vehicle's free tether segment from the downward vertical."""
        g = tether_geometry(s, self.config)
        if vehicle == "pod":
            anchor = (g[11], g[12]) if g[4] > 0 else s.drone_pos
            pos = s.pod_pos
        else:
            anchor = (g[9], g[10]) if g[4] > 0 else s.pod_pos
            pos = s.drone_pos
        vx, vy = pos[0] - anchor[0], pos[1] - anchor[1]
        return math.atan2(abs(vx), -vy)

    def settled(self, vehicles=("drone", "pod"), hold_time: float = SETTLE_TIME) -> Predicate:
        since = [None]

        def pred(s: SystemState) -> bool:
            calm = math.hypot(*s.drone_vel) < SETTLE_SPEED and math.hypot(*s.pod_vel) < SETTLE_SPEED
            calm = calm and all(self.swing(s, v) < SWING_LIMIT for v in vehicles)
            if not calm:
                since[0] = None
                return False
            if since[0] is None:
                since[0] = s.time
            return s.time - since[0] >= hold_time

        return pred

    def drone_pd(self, target, gains=None, target_vel=(0.0, 0.0)) -> Callable[[SystemState], tuple]:
        ph, cfg = self.ph, self.config
        gains = gains or cfg.controller_gains

        def thrust(s: SystemState):
            f_d, _ = tether_forces(s, cfg)
            return pd_thrust(s.drone_pos, s.drone_vel, target(s) if callable(target) else target,
                             ph.m_d, gains, ph.g, ph.max_thrust_d, _cap(f_d, ph.m_p * ph.g),
                             target_vel)

        return thrust

    def pod_pd(self, target, gains=None) -> Callable[[SystemState], tuple]:
        ph, cfg = self.ph, self.config
        gains = gains or cfg.controller_gains

        def thrust(s: SystemState):
            _, f_p = tether_forces(s, cfg)
            return pd_thrust(s.pod_pos, s.pod_vel, target(s) if callable(target) else target,
                             ph.m_p, gains, ph.g, ph.max_thrust_p, _cap(f_p, ph.m_p * ph.g))

        return thrust

    def orbit(self, vehicle: str, direction: float, speed: float,
              radius: Callable[[SystemState], float]) -> Callable[[SystemState], tuple]:
        ph, cfg = self.ph, self.config
        gains = cfg.controller_gains
        if vehicle == "drone":
            mass, limit, cap = ph.m_d, ph.max_thrust_d, ph.m_p * ph.g
        else:
            mass, limit, cap = ph.m_p, ph.max_thrust_p, ph.m_p * ph.g

        def thrust(s: SystemState):
            f_d, f_p = tether_forces(s, cfg)
            pos, vel, f = (s.drone_pos, s.drone_vel, f_d) if vehicle == "drone" else (s.pod_pos, s.pod_vel, f_p)
            return orbit_thrust(pos, vel, self.center, direction, speed, radius(s), mass, gains,
                                ph.g, limit, _cap(f, cap))

        return thrust

    def angle_tracker(self, vehicle: str) -> Callable[[SystemState], float]:
        """Accumulated polar angle swept by a vehicle since creation."""
        key = "drone_pos" if vehicle == "drone" else "pod_pos"
        last = [getattr(self.state, key)]
        total = [0.0]
        cx, cy = self.center

        def swept(s: SystemState) -> float:
            p = getattr(s, key)
            if p is not last[0]:
                total[0] += kernels.angle_delta(last[0][0] - cx, last[0][1] - cy, p[0] - cx, p[1] - cy)
                last[0] = p
            return total[0]

        return swept


def _cap(force, cap: float):
    n = math.hypot(force[0], force[1])
    if n <= cap or n == 0.0:
        return force
    return (force[0] * cap / n, force[1] * cap / n)


def _control(drone=None, pod=None, winch: float = 0.0) -> Controller:
    def ctrl(s: SystemState) -> ControlInput:
        return ControlInput(
            drone_thrust_vector=drone(s) if drone is not None else (0.0, 0.0),
            pod_thrust_vector=pod(s) if pod is not None else (0.0, 0.0),
            winch_rate=winch(s) if callable(winch) else winch,
        )

    return ctrl


def drone_params(config: ScenarioConfig) -> CriticalDistanceParams:
    return CriticalDistanceParams(config.vehicles.drone_body_radius, config.mission.clearance)


def pod_params(config: ScenarioConfig) -> CriticalDistanceParams:
    return CriticalDistanceParams(config.vehicles.pod_half_diagonal, config.mission.clearance)


def orbit_radius(config: ScenarioConfig, drone_loops: int) -> float:
    """Start radius of the drone's orbit: the wrap shortens the drone side by one
    branch circumference per revolution, so start that much outside D_min."""
    d = config.branch.diameter
    return (circumnavigation_length(d, drone_params(config), drone_loops) + 0.5 * d
            + config.mission.clearance)


def release_length(config: ScenarioConfig, drone_loops: int) -> float:
    """Tether paid out before the first loop: twice the circumnavigation
    requirement plus clearance."""
    d = config.branch.diameter
    return 2.0 * circumnavigation_length(d, drone_params(config), drone_loops) + config.mission.clearance


# -- preflight ---------------------------------------------------------------

def _preflight(m: Mission) -> str | None:
    cfg = m.config
    v = cfg.vehicles
    if v.drone_max_thrust <= v.total_mass * cfg.gravity:
        return (f"drone_max_thrust {v.drone_max_thrust:.2f} N cannot hover "
                f"{v.total_mass:.3f} kg ({v.total_mass * cfg.gravity:.2f} N)")
    dmin = critical_distance(cfg.branch.diameter, drone_params(cfg))
    r, _ = m.polar(m.state.drone_pos)
    m.diagnostics["drone_start_distance_m"] = r
    m.diagnostics["drone_dmin_m"] = dmin
    if r < dmin:
        return f"drone starts {r:.3f} m from the branch centre, inside D_min = {dmin:.3f} m"
    return None


# -- perching ----------------------------------------------------------------

def _approach_and_release(m: Mission, drone_loops: int) -> None:
    cfg = m.config
    r0 = orbit_radius(cfg, drone_loops)
    target_len = release_length(cfg, drone_loops)
    total = cfg.tether.total_length
    target_spooled = max(0.0, total - target_len)
    approach = (m.ph.cx + r0, m.ph.cy)
    winch = lambda s: cfg.spool.winch_rate_max if s.spooled_length > target_spooled + 1e-9 else 0.0

    def done(s: SystemState) -> bool:
        near = math.hypot(s.drone_pos[0] - approach[0], s.drone_pos[1] - approach[1]) < 0.05
        released = s.spooled_length <= target_spooled + 1e-6 or not cfg.mission.winch_enabled
        slow = math.hypot(*s.drone_vel) < 0.1 and math.hypot(*s.pod_vel) < 0.2
        return near and released and slow

    m.set_motors(drone=True)
    m.run_phase("APPROACH_AND_RELEASE", _control(drone=m.drone_pd(approach), winch=winch), done,
                "drone at approach point, tether released, speeds low")


def _drone_loop(m: Mission, name: str, target_loops: int,
                table_charge: dict[str, float]) -> None:
    """Orbit the drone round the branch until the wrap count reaches
    ``target_loops`` and the drone is back on the hanging side."""
    cfg = m.config
    dmin = critical_distance(cfg.branch.diameter, drone_params(cfg))
    speed = cfg.controller_gains.orbit_speed

    def radius(s: SystemState) -> float:
        g = tether_geometry(s, cfg)
        r, _ = m.polar(s.drone_pos)
        if g[4] > 0.0 and s.tether_taut:
            return max(dmin, r + 0.02)
        return max(dmin, r)

    swept = m.angle_tracker("drone")

    def around(s: SystemState) -> bool:
        # the sweep guard stops a pod swing on the drape pass from counting as a loop
        turned = swept(s) >= 1.5 * math.pi
        if s.loops < target_loops or not turned:
            return False
        _, ang = m.polar(s.drone_pos)
        # hanging side for a counter-clockwise wrap is the left (x < 0), below centre
        return math.cos(ang) < -0.2 and math.sin(ang) < -0.3

    m.set_motors(drone=True)
    m.run_phase(name, _control(drone=m.orbit("drone", 1.0, speed, radius)), around,
                f"drone swept 3/4 turn, loops >= {target_loops}, drone on hanging side",
                table_charge)


def _hang_target(m: Mission, vehicle: str, sag: float = 0.01):
    """Moving target straight below the tangent the vehicle hangs from, a little
    deeper than its free length so the tether stays taut."""
    cfg = m.config

    def target(s: SystemState) -> tuple[float, float]:
        g = tether_geometry(s, cfg)
        if vehicle == "drone":
            tx, ty, free = g[9], g[10], g[1]
        else:
            tx, ty, free = g[11], g[12], g[3]
        return (tx, ty - free - sag)

    return target


def _stabilize(m: Mission, loops: int, name: str = "STABILIZE") -> None:
    settled = m.settled()
    m.set_motors(drone=True, pod=True)
    m.run_phase(name, _control(drone=m.drone_pd(_hang_target(m, "drone")),
                               pod=m.pod_pd(_hang_target(m, "pod"))),
                lambda s: settled(s) and s.loops == loops,
                f"speeds < 0.05 m/s and swing < 2 deg for 1 s with loops == {loops}")


def _pod_loop(m: Mission, name: str, target_loops: int, table_charge: dict[str, float]) -> None:
    """Fly the pod clockwise once round the branch while the drone holds station."""
    cfg = m.config
    ph = m.ph
    speed = cfg.controller_gains.orbit_speed
    swept = m.angle_tracker("pod")

    def radius(s: SystemState) -> float:
        r, _ = m.polar(s.pod_pos)
        return r + 0.02 if s.tether_taut else r

    def winch(s: SystemState) -> float:
        # pay out what the wrap consumes so the orbit radius holds
        r, _ = m.polar(s.pod_pos)
        return ph.R * speed / max(r, ph.R)

    def around(s: SystemState) -> bool:
        return abs(swept(s)) >= TWO_PI and s.loops == target_loops

    m.set_motors(pod=True)
    m.run_phase(name, _control(drone=m.drone_pd(_hang_target(m, "drone")),
                               pod=m.orbit("pod", -1.0, speed, radius), winch=winch),
                around, f"pod swept 2 pi and loops == {target_loops}", table_charge)


def _hold_and_shutdown(m: Mission, model: StabilityModel) -> StrategyTrace:
    m.set_motors(drone=False, pod=False)
    m.run_phase("HOLD_AND_SHUTDOWN", _control(), m.settled(("drone", "pod")),
                "motors off, speeds < 0.05 m/s and swing < 2 deg for 1 s")
    hold = hold_check(m.state, model, m.config)
    if hold and m.state.loops >= 2:
        return m.finish(Outcome.PERCHED, hold)
    m.diagnostics["slip_reason"] = (
        f"hold_check failed with {m.state.loops} loop(s) at incline "
        f"{math.degrees(m.config.branch.incline_angle):.1f} deg")
    return m.finish(Outcome.SLIPPED, hold)


def run_duo_perch(config: ScenarioConfig, initial_state: SystemState | None = None) -> StrategyTrace:
    """Drone lays the first loop, pod flies the second, then both shut down."""
    m = Mission(config, initial_state or airborne_state(config), "duo_perch")
    model = StabilityModel.from_config(config)
    reason = _preflight(m)
    if reason:
        m.diagnostics["abort_reason"] = reason
        return m.finish(Outcome.ABORTED)
    loops = config.mission.perch_loops
    try:
        _approach_and_release(m, drone_loops=1)
        _drone_loop(m, "DRONE_FIRST_LOOP", 1, {"drone": m.table.first_loop})
        _stabilize(m, 1)
        for n in range(2, loops + 1):
            _pod_loop(m, "POD_SECOND_LOOP" if n == 2 else f"POD_LOOP_{n}", n,
                      {"pod": m.table.pod_propeller_disentangle})
            _stabilize(m, n, "POD_SETTLE" if n == 2 else f"POD_SETTLE_{n}")
        return _hold_and_shutdown(m, model)
    except _Stop as stop:
        m.diagnostics["stop_reason"] = stop.reason
        return m.finish(stop.outcome)


def run_solo_perch(config: ScenarioConfig, initial_state: SystemState | None = None) -> StrategyTrace:
    """Drone lays every loop itself."""
    m = Mission(config, initial_state or airborne_state(config), "solo_perch")
    model = StabilityModel.from_config(config)
    reason = _preflight(m)
    if reason:
        m.diagnostics["abort_reason"] = reason
        return m.finish(Outcome.ABORTED)
    loops = config.mission.perch_loops
    costs = [m.table.first_loop, m.table.second_loop]
    try:
        _approach_and_release(m, drone_loops=loops)
        names = ["DRONE_FIRST_LOOP", "DRONE_SECOND_LOOP"]
        for n in range(1, loops + 1):
            name = names[n - 1] if n <= 2 else f"DRONE_LOOP_{n}"
            cost = costs[n - 1] if n <= 2 else m.table.second_loop
            _drone_loop(m, name, n, {"drone": cost})
            _stabilize(m, n, "STABILIZE" if n == 1 else f"STABILIZE_{n}")
        return _hold_and_shutdown(m, model)
    except _Stop as stop:
        m.diagnostics["stop_reason"] = stop.reason
        return m.finish(stop.outcome)


# -- disentangling -----------------------------------------------------------

def _clear(m: Mission, s: SystemState) -> bool:
    return s.loops == 0 and tether_geometry(s, m.config)[4] <= 0.0


def _free_pod(m: Mission, s: SystemState) -> float:
    g = tether_geometry(s, m.config)
    return g[3] if g[4] > 0.0 else g[0]


def _winch_watch(m: Mission) -> Callable[[SystemState], None]:
    """Abort when the winch is loaded past its limit for more than a second."""
    limit = m.config.spool.winch_max_tension
    since = [None]

    def monitor(s: SystemState) -> None:
        if s.tension_pod > limit:
            if since[0] is None:
                since[0] = s.time
            elif s.time - since[0] > 1.0:
                raise _Stop(Outcome.ABORTED,
                            f"winch tension {s.tension_pod:.1f} N above {limit:.1f} N for > 1 s")
        else:
            since[0] = None

    return monitor


def _start(config: ScenarioConfig, initial_state: SystemState | None, strategy: str) -> Mission:
    state = initial_state or perched_state(config, loops=config.mission.perch_loops)
    return Mission(config, dataclasses.replace(state, time=0.0), strategy)


def _drone_unwind(m: Mission, name: str, target_loops: int, table_charge: dict[str, float],
                  winch=0.0, monitor=None) -> None:
    """Fly the drone clockwise, against the wrap, until ``target_loops`` remain
    (and, for the last loop, the tether is off the branch)."""
    cfg = m.config
    dmin = critical_distance(cfg.branch.diameter, drone_params(cfg))
    swept = m.angle_tracker("drone")

    def radius(s: SystemState) -> float:
        r, _ = m.polar(s.drone_pos)
        return max(dmin, r + 0.02) if s.tether_taut else max(dmin, r)

    def done(s: SystemState) -> bool:
        turned = swept(s) <= -TWO_PI  # always update the tracker
        if target_loops == 0:
            return _clear(m, s)
        return turned and s.loops <= target_loops

    m.set_motors(drone=True)
    m.run_phase(name, _control(drone=m.orbit("drone", -1.0, cfg.controller_gains.orbit_speed,
                                             radius), winch=winch),
                done, "tether clear of the branch" if target_loops == 0
                else f"drone swept one turn and loops <= {target_loops}",
                table_charge, monitor)


def _depart(m: Mission, carry_length: float, pendulum_check: bool = False) -> StrategyTrace:
    """Climb to the departure point along a ramped waypoint with the pod hanging below."""
    cfg = m.config
    ph = m.ph
    goal = (ph.cx + cfg.mission.start_x, ph.cy + cfg.mission.start_y)
    start, t0 = m.state.drone_pos, m.state.time
    span = math.hypot(goal[0] - start[0], goal[1] - start[1])

    def waypoint(s: SystemState) -> tuple[float, float]:
        u = min(1.0, (s.time - t0) * DEPART_SPEED / span) if span > 0 else 1.0
        return (start[0] + u * (goal[0] - start[0]), start[1] + u * (goal[1] - start[1]))

    def winch(s: SystemState) -> float:
        return -cfg.spool.winch_rate_max if _free_pod(m, s) > carry_length else 0.0

    def done(s: SystemState) -> bool:
        near = math.hypot(s.drone_pos[0] - goal[0], s.drone_pos[1] - goal[1]) < 0.1
        return near and math.hypot(*s.drone_vel) < 0.2 and _clear(m, s)

    m.set_motors(drone=True, pod=False)
    m.run_phase("DEPART", _control(drone=m.drone_pd(waypoint), winch=winch), done,
                "drone at departure point with the tether clear")
    if pendulum_check:
        _pendulum_check(m)
    return m.finish(Outcome.AIRBORNE)


def _pendulum_check(m: Mission) -> None:
    """Warn when the passive pod swung further sideways from the drone than twice
    the drone's critical distance at any point of the run, i.e. out past the
    far side of the drone's own orbit."""
    offset = max(abs(row[3] - row[1]) for row in m.samples)
    limit = 2.0 * critical_distance(m.config.branch.diameter, drone_params(m.config))
    m.diagnostics["max_pod_lateral_offset_m"] = offset
    if offset > limit:
        m.warnings.append(f"pod pendulum amplitude {offset:.3f} m exceeds {limit:.3f} m "
                          "(twice the drone critical distance)")


CARRY_LENGTH = 0.15  # pod tether left out once airborne (m)
TAKEOFF_GAP = 0.05  # pod free tether kept while the drone unwinds (m)
SWING_LENGTH = 0.3  # pod free tether while it swings through its reverse loop (m)


def _pod_damper(m: Mission) -> Callable[[SystemState], tuple]:
    """Pod thrust that damps its swing and centres it below its tangent point.

    There is no gravity feedforward: the pod's weight stays on the tether,
    which is what keeps the parked drone from slipping.
    """
    ph, gains = m.ph, m.config.controller_gains
    target = _hang_target(m, "pod")

    def thrust(s: SystemState):
        tx, _ = target(s)
        fx = ph.m_p * (gains.kp * (tx - s.pod_pos[0]) - gains.kd * s.pod_vel[0])
        fy = -ph.m_p * gains.kd * s.pod_vel[1]
        n = math.hypot(fx, fy)
        if n > ph.max_thrust_p:
            fx, fy = fx * ph.max_thrust_p / n, fy * ph.max_thrust_p / n
        return (fx, fy)

    return thrust


def run_duo_disentangle(config: ScenarioConfig, method: str = "winding",
                        initial_state: SystemState | None = None) -> StrategyTrace:
    """Pod retracts to the branch and undoes its loop, then the drone takes off.

    ``method`` selects how the pod goes round: ``winding`` keeps reeling in so
    the pod crawls round the bark, ``propeller`` flies it round.
    """
    if method not in ("winding", "propeller"):
        raise ValueError(f"method must be 'winding' or 'propeller', got {method!r}")
    m = _start(config, initial_state, f"duo_disentangle_{method}")
    if _clear(m, m.state):
        return m.finish(Outcome.AIRBORNE)
    if not config.mission.winch_enabled:
        m.diagnostics["abort_reason"] = "duo disentangling needs the winch"
        return m.finish(Outcome.ABORTED)
    cfg = config
    ph = m.ph
    rate = cfg.spool.winch_rate_max
    watch = _winch_watch(m)
    pod_dmin = critical_distance(cfg.branch.diameter, pod_params(cfg))
    try:
        m.set_motors(drone=False, pod=False)
        if method == "winding":
            near = lambda s: _free_pod(m, s) <= 0.01
            desc = "pod free length <= 0.01 m"
        else:
            near = lambda s: m.polar(s.pod_pos)[0] <= pod_dmin
            desc = f"pod within {pod_dmin:.3f} m of the branch centre"
        m.run_phase("RETRACT_TO_BRANCH", _control(winch=-rate), near, desc, monitor=watch)

        target = m.state.loops - 1
        swept = m.angle_tracker("pod")
        # past the bottom on the way back up is enough: the wrap count carries the rest
        around = lambda s: swept(s) >= 1.5 * math.pi and s.loops <= target
        desc = f"pod swept 3/4 turn and loops <= {target}"
        if method == "winding":
            # reel in until the pod is over the top; past that it falls round on its
            # own, so pay out to let it swing through on a slower, longer pendulum
            def reel(s: SystemState) -> float:
                if swept(s) < 0.5 * math.pi:
                    return -rate
                return rate if _free_pod(m, s) < SWING_LENGTH else 0.0
            m.run_phase("POD_REVERSE_LOOP", _control(winch=reel), around, desc,
                        {"pod": m.table.winding_disentangle}, watch)
        else:
            speed = cfg.controller_gains.orbit_speed
            radius = lambda s: m.polar(s.pod_pos)[0]
            # unwinding frees tether on the pod side; reel it in to hold the radius
            reel = lambda s: -ph.R * speed / max(m.polar(s.pod_pos)[0], ph.R)
            m.set_motors(pod=True)
            m.run_phase("POD_REVERSE_LOOP",
                        _control(pod=m.orbit("pod", 1.0, speed, radius), winch=reel),
                        around, desc, {"pod": m.table.pod_propeller_disentangle}, watch)
            m.set_motors(pod=False)

        settled = m.settled(("pod",), hold_time=0.5)
        reel_in = lambda s: -0.5 * rate if _free_pod(m, s) > TAKEOFF_GAP else 0.0
        m.set_motors(pod=True)
        m.run_phase("RETRACT_FOR_TAKEOFF", _control(pod=_pod_damper(m), winch=reel_in),
                    lambda s: _free_pod(m, s) <= TAKEOFF_GAP + 1e-3 and settled(s)
                    and s.loops == target,
                    f"pod settled within {TAKEOFF_GAP} m of the branch", monitor=watch)
        m.set_motors(pod=False)
        _drone_unwind(m, "DRONE_TAKEOFF", 0, {})
        return _depart(m, CARRY_LENGTH)
    except _Stop as stop:
        m.diagnostics["stop_reason"] = stop.reason
        return m.finish(stop.outcome)


def run_solo_disentangle(config: ScenarioConfig,
                         initial_state: SystemState | None = None) -> StrategyTrace:
    """Drone undoes both loops itself while the pod is reeled in."""
    m = _start(config, initial_state, "solo_disentangle")
    if _clear(m, m.state):
        return m.finish(Outcome.AIRBORNE)
    v = config.vehicles
    if v.drone_max_thrust <= v.total_mass * config.gravity:
        m.diagnostics["abort_reason"] = "drone cannot lift the pod"
        return m.finish(Outcome.ABORTED)
    rate = config.spool.winch_rate_max

    def reel(s: SystemState) -> float:
        return -rate if _free_pod(m, s) > CARRY_LENGTH else 0.0

    watch = _winch_watch(m)
    costs = {2: m.table.second_loop, 1: m.table.first_loop}
    names = {2: "DRONE_FIRST_REVERSE_LOOP", 1: "DRONE_SECOND_REVERSE_LOOP"}
    try:
        while m.state.loops > 0 or not _clear(m, m.state):
            n = m.state.loops
            name = names.get(n, f"DRONE_REVERSE_LOOP_{n}")
            _drone_unwind(m, name, max(n - 1, 0), {"drone": costs.get(n, m.table.second_loop)},
                          winch=reel, monitor=watch)
        return _depart(m, CARRY_LENGTH, pendulum_check=True)
    except _Stop as stop:
        m.diagnostics["stop_reason"] = stop.reason
        return m.finish(stop.outcome)


RUNNERS = {
    "duo_perch": run_duo_perch,
    "solo_perch": run_solo_perch,
    "duo_disentangle_winding": lambda c, s=None: run_duo_disentangle(c, "winding", s),
    "duo_disentangle_propeller": lambda c, s=None: run_duo_disentangle(c, "propeller", s),
    "solo_disentangle": run_solo_disentangle,
}


def run_strategy(config: ScenarioConfig, initial_state: SystemState | None = None) -> StrategyTrace:
    """Run the strategy named in ``config.strategy``."""
    return RUNNERS[config.strategy](config, initial_state)


def write_state_csv(trace: StrategyTrace, stream) -> None:
    stream.write(",".join(STATE_CSV_HEADER) + "\n")
    for row in trace.samples:
        t, dx, dy, px, py, th, sp, taut, ten = row
        stream.write(f"{t:.3f},{dx:.6f},{dy:.6f},{px:.6f},{py:.6f},{th:.6f},{sp:.6f},{taut},{ten:.6f}\n")
