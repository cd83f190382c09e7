"""Planar point-mass dynamics of drone and pod joined by the tether.

Both vehicles are point masses steered by a thrust vector (attitude is
abstracted away). The tether is inextensible and massless; it goes slack
whenever holding it straight would need a compressive force, and while it is
wrapped round the branch the end tensions obey the capstan inequality. The
per-step solve lives in :mod:`tensile_perch.kernels`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

from tensile_perch import kernels
from tensile_perch.capstan import StabilityModel, effective_friction, is_feasible
from tensile_perch.geometry import WrapState, loops_of, wrap_state
from tensile_perch.scenario import ControllerGains, ScenarioConfig
from tensile_perch.winding import SpoolSpec

Vec = tuple[float, float]

# taut/slack hysteresis band (m)
SLACK_BAND = 1e-6
# kinetic energy may not exceed this multiple of the reference energy
BLOWUP_FACTOR = 10.0


class InstabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class SystemState:
    time: float
    drone_pos: Vec
    drone_vel: Vec
    pod_pos: Vec
    pod_vel: Vec
    wrap_angle: float = 0.0
    spooled_length: float = 0.0
    tether_taut: bool = False
    drone_motors_on: bool = True
    pod_motors_on: bool = False
    tension_drone: float = 0.0
    tension_pod: float = 0.0
    slip_rate: float = 0.0

    @property
    def loops(self) -> int:
        return loops_of(self.wrap_angle)

    def wrap(self, config: ScenarioConfig) -> WrapState:
        return wrap_state(self.drone_pos, self.pod_pos, config.branch, self.wrap_angle)


@dataclass(frozen=True)
class ControlInput:
    drone_thrust_vector: Vec = (0.0, 0.0)
    pod_thrust_vector: Vec = (0.0, 0.0)
    winch_rate: float = 0.0


@dataclass(frozen=True)
class _Physics:
    """Per-config constants, cached so the step loop does no attribute digging."""

    cx: float
    cy: float
    R: float
    m_d: float
    m_p: float
    g: float
    damping: float
    mu_eff: float
    total_length: float
    capacity: float
    dt: float
    max_thrust_d: float
    max_thrust_p: float
    winch_max: float


@lru_cache(maxsize=64)
def physics(config: ScenarioConfig) -> _Physics:
    b, v = config.branch, config.vehicles
    model = StabilityModel.from_config(config)
    spool = SpoolSpec.from_config(config)
    winch_max = config.spool.winch_rate_max if config.mission.winch_enabled else 0.0
    return _Physics(
        cx=0.0, cy=b.center_height, R=b.radius,
        m_d=v.drone_side_mass, m_p=v.pod_mass, g=config.gravity,
        damping=config.linear_damping,
        mu_eff=effective_friction(model, b.incline_angle),
        total_length=config.tether.total_length,
        capacity=min(spool.capacity, config.tether.total_length),
        dt=config.timestep,
        max_thrust_d=v.drone_max_thrust, max_thrust_p=v.pod_max_thrust,
        winch_max=winch_max,
    )


def saturate(vec: Vec, limit: float) -> Vec:
    n = math.hypot(vec[0], vec[1])
    if n <= limit or n == 0.0:
        return vec
    s = limit / n
    return (vec[0] * s, vec[1] * s)


def mechanical_energy(state: SystemState, config: ScenarioConfig, datum: float = 0.0) -> float:
    ph = physics(config)
    ke = 0.5 * ph.m_d * (state.drone_vel[0] ** 2 + state.drone_vel[1] ** 2) \
        + 0.5 * ph.m_p * (state.pod_vel[0] ** 2 + state.pod_vel[1] ** 2)
    pe = ph.g * (ph.m_d * (state.drone_pos[1] - datum) + ph.m_p * (state.pod_pos[1] - datum))
    return ke + pe


def kinetic_energy(state: SystemState, config: ScenarioConfig) -> float:
    ph = physics(config)
    return 0.5 * ph.m_d * (state.drone_vel[0] ** 2 + state.drone_vel[1] ** 2) \
        + 0.5 * ph.m_p * (state.pod_vel[0] ** 2 + state.pod_vel[1] ** 2)


def reference_energy(state: SystemState, config: ScenarioConfig) -> float:
    """Energy scale for the blow-up guard: mechanical energy above a datum
    one tether length plus a metre below the branch."""
    ph = physics(config)
    datum = ph.cy - ph.total_length - 1.0
    return max(mechanical_energy(state, config, datum), 1.0)


def step(state: SystemState, control: ControlInput, config: ScenarioConfig,
         fixed_drone: bool = False, energy_ref: float | None = None) -> SystemState:
    """One semi-implicit Euler step of length ``config.timestep``.

    ``fixed_drone`` pins the drone in place (infinite mass), which turns the
    pod into a pendulum about the drone anchor.
    """
    ph = physics(config)
    dvx, dvy = state.drone_vel
    pvx, pvy = state.pod_vel
    if state.drone_motors_on:
        tdx, tdy = saturate(control.drone_thrust_vector, ph.max_thrust_d)
    else:
        tdx = tdy = 0.0
    if state.pod_motors_on:
        tpx, tpy = saturate(control.pod_thrust_vector, ph.max_thrust_p)
    else:
        tpx = tpy = 0.0
    c = ph.damping
    fdx = tdx - c * dvx
    fdy = tdy - ph.m_d * ph.g - c * dvy
    fpx = tpx - c * pvx
    fpy = tpy - ph.m_p * ph.g - c * pvy
    winch = max(-ph.winch_max, min(ph.winch_max, control.winch_rate))
    inv_md = 0.0 if fixed_drone else 1.0 / ph.m_d

    out = kernels.tether_step(
        state.drone_pos[0], state.drone_pos[1], dvx, dvy,
        state.pod_pos[0], state.pod_pos[1], pvx, pvy,
        state.wrap_angle, state.spooled_length, state.tether_taut,
        fdx, fdy, fpx, fpy, winch, inv_md, 1.0 / ph.m_p,
        ph.cx, ph.cy, ph.R, ph.mu_eff, ph.total_length, ph.capacity, ph.dt, SLACK_BAND,
    )
    new = SystemState(
        time=state.time + ph.dt,
        drone_pos=(out[0], out[1]), drone_vel=(0.0, 0.0) if fixed_drone else (out[2], out[3]),
        pod_pos=(out[4], out[5]), pod_vel=(out[6], out[7]),
        wrap_angle=out[8], spooled_length=out[9], tether_taut=bool(out[10]),
        drone_motors_on=state.drone_motors_on, pod_motors_on=state.pod_motors_on,
        tension_drone=out[11], tension_pod=out[12], slip_rate=out[13],
    )
    if energy_ref is not None:
        ke = kinetic_energy(new, config)
        if not math.isfinite(ke) or ke > BLOWUP_FACTOR * energy_ref:
            raise InstabilityError(f"kinetic energy {ke:.3g} J exceeds {BLOWUP_FACTOR}x "
                                   f"reference {energy_ref:.3g} J at t={new.time:.3f} s")
    return new


def tether_geometry(state: SystemState, config: ScenarioConfig):
    ph = physics(config)
    return kernels.wrap_geometry(state.drone_pos[0], state.drone_pos[1], state.pod_pos[0],
                                 state.pod_pos[1], ph.cx, ph.cy, ph.R, state.wrap_angle)


def tether_forces(state: SystemState, config: ScenarioConfig) -> tuple[Vec, Vec]:
    """Forces the tether currently exerts on the drone and on the pod."""
    g = tether_geometry(state, config)
    return ((-state.tension_drone * g[5], -state.tension_drone * g[6]),
            (-state.tension_pod * g[7], -state.tension_pod * g[8]))


def deployed_length(state: SystemState, config: ScenarioConfig) -> float:
    """Free + wrapped length plus spooled length (equals total length when taut)."""
    return tether_geometry(state, config)[0] + state.spooled_length


def weight_ratio(config: ScenarioConfig) -> float:
    """Pod share of the total system weight."""
    v = config.vehicles
    return v.pod_mass / v.total_mass


def hold_check(state: SystemState, model: StabilityModel, config: ScenarioConfig) -> bool:
    """True when the pod counterweight holds the drone at the current loop count."""
    loops = state.loops
    if loops < 1:
        return False
    return is_feasible(model, weight_ratio(config), loops, config.branch.incline_angle)


def _estimated_tether_force(force: Vec, cap: float) -> Vec:
    # feed forward measured tether pull, capped to avoid chasing our own constraint force
    n = math.hypot(force[0], force[1])
    if n <= cap or n == 0.0:
        return force
    return (force[0] * cap / n, force[1] * cap / n)


def pd_thrust(pos: Vec, vel: Vec, target: Vec, mass: float, gains: ControllerGains,
              gravity: float, max_thrust: float, tether_force: Vec = (0.0, 0.0),
              target_vel: Vec = (0.0, 0.0)) -> Vec:
    ax = gains.kp * (target[0] - pos[0]) + gains.kd * (target_vel[0] - vel[0])
    ay = gains.kp * (target[1] - pos[1]) + gains.kd * (target_vel[1] - vel[1])
    fx = mass * ax - tether_force[0]
    fy = mass * (ay + gravity) - tether_force[1]
    return saturate((fx, fy), max_thrust)


def orbit_thrust(pos: Vec, vel: Vec, center: Vec, direction: float, speed: float,
                 radius: float, mass: float, gains: ControllerGains, gravity: float,
                 max_thrust: float, tether_force: Vec = (0.0, 0.0)) -> Vec:
    """Thrust to circle ``center`` at ``speed`` (direction +1 ccw, -1 cw) at ``radius``."""
    rx = pos[0] - center[0]
    ry = pos[1] - center[1]
    r = math.hypot(rx, ry)
    erx, ery = rx / r, ry / r
    etx, ety = -direction * ery, direction * erx
    v_t = vel[0] * etx + vel[1] * ety
    v_r = vel[0] * erx + vel[1] * ery
    a_t = gains.orbit_kv * (speed - v_t)
    a_r = gains.orbit_kr * (radius - r) - 2.0 * math.sqrt(gains.orbit_kr) * v_r - v_t * v_t / r
    fx = mass * (a_t * etx + a_r * erx) - tether_force[0]
    fy = mass * (a_t * ety + a_r * ery + gravity) - tether_force[1]
    return saturate((fx, fy), max_thrust)


def waypoint_controller(state: SystemState, target: Vec, gains: ControllerGains,
                        config: ScenarioConfig, vehicle: str = "drone") -> ControlInput:
    """PD position hold for one vehicle with gravity and tether feedforward."""
    ph = physics(config)
    f_d, f_p = tether_forces(state, config)
    if vehicle == "drone":
        thrust = pd_thrust(state.drone_pos, state.drone_vel, target, ph.m_d, gains, ph.g,
                           ph.max_thrust_d, _estimated_tether_force(f_d, ph.m_p * ph.g))
        return ControlInput(drone_thrust_vector=thrust)
    if vehicle == "pod":
        thrust = pd_thrust(state.pod_pos, state.pod_vel, target, ph.m_p, gains, ph.g,
                           ph.max_thrust_p, _estimated_tether_force(f_p, ph.m_p * ph.g))
        return ControlInput(pod_thrust_vector=thrust)
    raise ValueError(f"unknown vehicle {vehicle!r}")


def airborne_state(config: ScenarioConfig) -> SystemState:
    """Drone at the mission start point with the pod hanging straight below it."""
    ph = physics(config)
    m = config.mission
    drone = (ph.cx + m.start_x, ph.cy + m.start_y)
    released = m.initial_released
    pod = (drone[0], drone[1] - released)
    theta = kernels.angle_delta(drone[0] - ph.cx, drone[1] - ph.cy, pod[0] - ph.cx, pod[1] - ph.cy)
    return SystemState(
        time=0.0, drone_pos=drone, drone_vel=(0.0, 0.0), pod_pos=pod, pod_vel=(0.0, 0.0),
        wrap_angle=theta, spooled_length=ph.total_length - released, tether_taut=True,
        drone_motors_on=True, pod_motors_on=False,
    )


def perched_state(config: ScenarioConfig, loops: int = 2, drone_drop: float = 0.5,
                  pod_drop: float = 0.5, direction: float = -1.0) -> SystemState:
    """Both vehicles hanging still on opposite sides of the branch.

    The tether goes ``loops`` full turns plus a half turn round the branch;
    with ``direction=-1`` the drone hangs on the left, the pod on the right.
    """
    ph = physics(config)
    R = ph.R
    drone = (ph.cx + direction * R, ph.cy - drone_drop)
    pod = (ph.cx - direction * R, ph.cy - pod_drop)
    base = kernels.angle_delta(drone[0] - ph.cx, drone[1] - ph.cy, pod[0] - ph.cx, pod[1] - ph.cy)
    # choose the branch of the angle whose magnitude is just below 2*pi*(loops+1)
    target = 2.0 * math.pi * (loops + 1)
    best = None
    for k in range(-(loops + 3), loops + 4):
        cand = base + 2.0 * math.pi * k
        if cand * direction > 0 and abs(cand) < target and (best is None or abs(cand) > abs(best)):
            best = cand
    theta = best
    g = kernels.wrap_geometry(drone[0], drone[1], pod[0], pod[1], ph.cx, ph.cy, R, theta)
    spooled = ph.total_length - g[0]
    if spooled < 0:
        raise ValueError("tether too short for the requested perched configuration")
    return SystemState(
        time=0.0, drone_pos=drone, drone_vel=(0.0, 0.0), pod_pos=pod, pod_vel=(0.0, 0.0),
        wrap_angle=theta, spooled_length=spooled, tether_taut=True,
        drone_motors_on=False, pod_motors_on=False,
        tension_drone=ph.m_d * ph.g, tension_pod=ph.m_p * ph.g,
    )
