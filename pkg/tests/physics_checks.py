"""Randomized physics checks shared by the dynamics tests and the acceptance suite.

Each ``check_*`` function builds its own configuration from a seeded RNG,
simulates it and returns the worst-case error it saw, so callers can assert
on tolerances and report margins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from tensile_perch import dynamics
from tensile_perch.capstan import StabilityModel, effective_friction
from tensile_perch.dynamics import ControlInput, SystemState
from tensile_perch.scenario import ScenarioConfig


@dataclass
class ConstraintReport:
    length_error: float = 0.0
    capstan_excess: float = -math.inf
    winding_error: float = 0.0
    negative_tension: float = 0.0
    slack_tension: float = 0.0
    taut_steps: int = 0
    wrapped_steps: int = 0


def random_config(rng: np.random.Generator) -> ScenarioConfig:
    drone_mass = rng.uniform(0.5, 2.0)
    pod_mass = rng.uniform(0.1, 1.5)
    ring = 0.102
    total = drone_mass + pod_mass + ring
    return ScenarioConfig().replace(
        branch__diameter=rng.uniform(0.02, 0.2),
        tether__total_length=6.0,
        spool__max_turns=200,
        branch__incline_angle=rng.uniform(0.0, 0.5),
        branch__friction_coeff=rng.uniform(0.05, 0.5),
        vehicles__drone_mass=drone_mass,
        vehicles__pod_mass=pod_mass,
        vehicles__drone_max_thrust=3.0 * total * 9.81,
        vehicles__pod_max_thrust=3.0 * pod_mass * 9.81,
        linear_damping=rng.uniform(0.0, 0.2),
    )


def _polar(p, cx, cy):
    return math.atan2(p[1] - cy, p[0] - cx)


def check_constraints(seed: int, steps: int = 300) -> ConstraintReport:
    """Length budget, capstan bound, tension sign and winding bookkeeping
    for a randomly perturbed wrapped (or unwrapped) start."""
    rng = np.random.default_rng(seed)
    config = random_config(rng)
    ph = dynamics.physics(config)
    loops = int(rng.integers(0, 4))
    state = dynamics.perched_state(config, loops, drone_drop=rng.uniform(0.2, 1.0),
                                   pod_drop=rng.uniform(0.2, 1.0),
                                   direction=float(rng.choice([-1.0, 1.0])))
    state = SystemState(
        time=0.0, drone_pos=state.drone_pos, drone_vel=tuple(rng.uniform(-1, 1, 2)),
        pod_pos=state.pod_pos, pod_vel=tuple(rng.uniform(-1, 1, 2)),
        wrap_angle=state.wrap_angle, spooled_length=state.spooled_length, tether_taut=True,
        drone_motors_on=bool(rng.random() < 0.7), pod_motors_on=bool(rng.random() < 0.5),
    )
    control = ControlInput(
        drone_thrust_vector=tuple(rng.uniform(-1, 1, 2) * 1.5 * ph.m_d * ph.g + (0, ph.m_d * ph.g)),
        pod_thrust_vector=tuple(rng.uniform(-1, 1, 2) * ph.m_p * ph.g),
        winch_rate=rng.uniform(-0.1, 0.1),
    )
    model = StabilityModel.from_config(config)
    mu_eff = effective_friction(model, config.branch.incline_angle)

    report = ConstraintReport()
    theta0 = state.wrap_angle
    drone_angles = [_polar(state.drone_pos, ph.cx, ph.cy)]
    pod_angles = [_polar(state.pod_pos, ph.cx, ph.cy)]
    thetas = [theta0]
    for _ in range(steps):
        alpha = dynamics.tether_geometry(state, config)[4]
        state = dynamics.step(state, control, config)
        drone_angles.append(_polar(state.drone_pos, ph.cx, ph.cy))
        pod_angles.append(_polar(state.pod_pos, ph.cx, ph.cy))
        thetas.append(state.wrap_angle)
        t_d, t_p = state.tension_drone, state.tension_pod
        report.negative_tension = min(report.negative_tension, t_d, t_p)
        if not state.tether_taut:
            report.slack_tension = max(report.slack_tension, t_d, t_p)
            continue
        report.taut_steps += 1
        err = abs(dynamics.deployed_length(state, config) - ph.total_length)
        report.length_error = max(report.length_error, err)
        if alpha > 0.0 and max(t_d, t_p) > 0.0:
            report.wrapped_steps += 1
            ratio = max(t_d, t_p) / min(t_d, t_p) if min(t_d, t_p) > 0 else math.inf
            report.capstan_excess = max(report.capstan_excess, ratio - math.exp(mu_eff * alpha))
    # independent bookkeeping: unwrapped polar angle of each end
    oracle = theta0 + (np.unwrap(pod_angles) - pod_angles[0]) - (np.unwrap(drone_angles) - drone_angles[0])
    report.winding_error = float(np.max(np.abs(oracle - np.asarray(thetas))))
    return report


def free_fall_config(rng: np.random.Generator) -> ScenarioConfig:
    cfg = random_config(rng)
    return cfg.replace(linear_damping=0.0, gravity=rng.uniform(1.0, 20.0))


def check_free_fall(seed: int, steps: int = 500) -> float:
    """Both vehicles dropped with motors off and a slack tether; returns the
    worst deviation from the discrete free-fall velocity ``-g * n * dt``."""
    rng = np.random.default_rng(seed)
    config = free_fall_config(rng)
    ph = dynamics.physics(config)
    x = ph.cx + rng.uniform(1.0, 3.0) * rng.choice([-1.0, 1.0])
    drone = (x, ph.cy + rng.uniform(0.0, 2.0))
    gap = rng.uniform(0.1, 1.0)
    pod = (x + rng.uniform(-0.05, 0.05), drone[1] - gap)
    state = SystemState(0.0, drone, (0.0, 0.0), pod, (0.0, 0.0),
                        wrap_angle=dynamics.kernels.angle_delta(drone[0] - ph.cx, drone[1] - ph.cy,
                                                                pod[0] - ph.cx, pod[1] - ph.cy),
                        spooled_length=ph.total_length - gap - 0.5, tether_taut=False,
                        drone_motors_on=False, pod_motors_on=False)
    worst = 0.0
    for n in range(1, steps + 1):
        state = dynamics.step(state, ControlInput(), config)
        v = -ph.g * n * ph.dt
        worst = max(worst, abs(state.drone_vel[1] - v), abs(state.pod_vel[1] - v),
                    abs(state.drone_vel[0]), abs(state.pod_vel[0]))
        assert not state.tether_taut
    return worst


def pendulum_period(config: ScenarioConfig, length: float, amplitude: float) -> float:
    """Small-swing period of the pod hanging from a pinned drone, from
    interpolated upward zero crossings of the horizontal offset."""
    ph = dynamics.physics(config)
    anchor = (ph.cx + 5.0, ph.cy)
    pod = (anchor[0] + length * math.sin(amplitude), anchor[1] - length * math.cos(amplitude))
    theta = dynamics.kernels.angle_delta(anchor[0] - ph.cx, anchor[1] - ph.cy,
                                         pod[0] - ph.cx, pod[1] - ph.cy)
    state = SystemState(0.0, anchor, (0.0, 0.0), pod, (0.0, 0.0), wrap_angle=theta,
                        spooled_length=ph.total_length - length, tether_taut=True,
                        drone_motors_on=False, pod_motors_on=False)
    expected = 2 * math.pi * math.sqrt(length / ph.g)
    crossings = []
    prev = state.pod_pos[0] - anchor[0]
    t_end = 2.6 * expected
    while state.time < t_end and len(crossings) < 2:
        state = dynamics.step(state, ControlInput(), config, fixed_drone=True)
        cur = state.pod_pos[0] - anchor[0]
        if prev < 0.0 <= cur:
            frac = -prev / (cur - prev)
            crossings.append(state.time - ph.dt * (1.0 - frac))
        prev = cur
    if len(crossings) < 2:
        return math.nan
    return crossings[1] - crossings[0]


def check_pendulum(seed: int, amplitude_deg: float = 2.0) -> float:
    """Relative error of the simulated period against ``2 pi sqrt(L / g)``."""
    rng = np.random.default_rng(seed)
    config = random_config(rng).replace(linear_damping=0.0, gravity=rng.uniform(5.0, 15.0))
    length = rng.uniform(0.2, 1.5)
    period = pendulum_period(config, length, math.radians(amplitude_deg))
    expected = 2 * math.pi * math.sqrt(length / config.gravity)
    return abs(period - expected) / expected
