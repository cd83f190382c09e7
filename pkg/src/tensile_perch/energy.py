"""Electrical power and energy model.

Hover power scales with mass as ``P = P_ref * (m / m_ref) ** k``; actuator-disk
momentum theory gives ``k = 1.5``. The break-even idle fraction is the share
of mission time the system must spend perched (motors off) before carrying
the pod costs less energy than flying the bare drone the whole time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

THEORETICAL_EXPONENT = 1.5
TABLE_DRONE_MASS = 1.008
TABLE_SYSTEM_MASS = 1.618
REFERENCE_IDLE_FRACTION = 0.489


@dataclass(frozen=True)
class PowerModel:
    reference_mass: float = TABLE_SYSTEM_MASS
    reference_power: float = 180.0
    mass_exponent: float = THEORETICAL_EXPONENT
    avionics_power: float = 0.0
    battery_voltage: float = 14.8
    motor_efficiency: float = 1.0

    def __post_init__(self) -> None:
        if self.reference_power <= 0:
            raise ValueError("reference_power must be > 0")
        if self.mass_exponent <= 0:
            raise ValueError("mass_exponent must be > 0")
        if self.reference_mass <= 0:
            raise ValueError("reference_mass must be > 0")
        if not 0 < self.motor_efficiency <= 1:
            raise ValueError("motor_efficiency must lie in (0, 1]")
        if self.battery_voltage <= 0:
            raise ValueError("battery_voltage must be > 0")


@dataclass(frozen=True)
class ManeuverCostTable:
    """Charges in mAh for each maneuver."""

    first_loop: float = 60.0
    second_loop: float = 49.0
    pod_propeller_disentangle: float = 11.0
    winding_disentangle: float = 0.73

    def __post_init__(self) -> None:
        for name in ("first_loop", "second_loop", "pod_propeller_disentangle", "winding_disentangle"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @classmethod
    def from_config(cls, config) -> ManeuverCostTable:
        c = config.costs
        return cls(c.first_loop, c.second_loop, c.pod_propeller_disentangle, c.winding_disentangle)


@dataclass(frozen=True)
class DisentangleRatios:
    pod_vs_drone: float
    winding_vs_drone: float
    propeller_vs_winding: float


@dataclass(frozen=True)
class Consumption:
    charge_mah: float
    energy_j: float


def calibrate_exponent(target_fraction: float = REFERENCE_IDLE_FRACTION,
                       base_mass: float = TABLE_DRONE_MASS,
                       system_mass: float = TABLE_SYSTEM_MASS) -> float:
    """Mass exponent that makes the zero-overhead break-even equal ``target_fraction``."""
    if not 0 < target_fraction < 1:
        raise ValueError("target_fraction must lie in (0, 1)")
    if not system_mass > base_mass > 0:
        raise ValueError("need system_mass > base_mass > 0")
    return math.log(1.0 - target_fraction) / math.log(base_mass / system_mass)


PRESETS = {
    "theoretical": THEORETICAL_EXPONENT,
    "paper-calibrated": calibrate_exponent(),
}


def preset(name: str, **overrides) -> PowerModel:
    try:
        k = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return PowerModel(mass_exponent=k, **overrides)


def mah_to_joules(charge_mah: float, voltage: float) -> float:
    return charge_mah * 3.6 * voltage


def joules_to_mah(energy_j: float, voltage: float) -> float:
    return energy_j / (3.6 * voltage)


def hover_power(model: PowerModel, mass: float) -> float:
    if mass <= 0:
        raise ValueError(f"mass must be > 0, got {mass}")
    return model.reference_power * (mass / model.reference_mass) ** model.mass_exponent


def break_even_idle_fraction(model: PowerModel, base_mass: float, system_mass: float,
                             maneuver_energy: float, mission_time: float) -> float:
    """Smallest perched fraction f with
    ``P(system)(1-f)T + P_avionics f T + E_maneuver <= P(base) T``; 1.0 if none."""
    if not base_mass > 0:
        raise ValueError("base_mass must be > 0")
    if system_mass < base_mass:
        raise ValueError("system_mass must be >= base_mass")
    if mission_time <= 0:
        raise ValueError("mission_time must be > 0")
    if maneuver_energy < 0:
        raise ValueError("maneuver_energy must be >= 0")
    p_sys = hover_power(model, system_mass)
    p_base = hover_power(model, base_mass)
    excess = p_sys * mission_time + maneuver_energy - p_base * mission_time
    if excess <= 0:
        return 0.0
    saving_rate = (p_sys - model.avionics_power) * mission_time
    if saving_rate <= 0:
        return 1.0
    return min(1.0, excess / saving_rate)


def idle_time_curve(model: PowerModel, base_mass: float, added_masses: Sequence[float],
                    maneuver_energy: float, mission_time: float) -> list[tuple[float, float]]:
    added = list(added_masses)
    if not added:
        raise ValueError("added mass sweep is empty")
    if any(b <= a for a, b in zip(added, added[1:])):
        raise ValueError("added mass sweep must be strictly increasing")
    return [
        (m, break_even_idle_fraction(model, base_mass, base_mass + m, maneuver_energy, mission_time))
        for m in added
    ]


def disentangle_comparison(table: ManeuverCostTable) -> DisentangleRatios:
    if table.second_loop <= 0 or table.winding_disentangle <= 0:
        raise ValueError("second_loop and winding_disentangle must be > 0")
    return DisentangleRatios(
        pod_vs_drone=table.pod_propeller_disentangle / table.second_loop,
        winding_vs_drone=table.winding_disentangle / table.second_loop,
        propeller_vs_winding=table.pod_propeller_disentangle / table.winding_disentangle,
    )


def electrical_power(model: PowerModel, thrust, gravity: float = 9.81) -> np.ndarray:
    """Electrical draw for a thrust magnitude (N), via the equivalent hover mass."""
    thrust = np.asarray(thrust, dtype=float)
    g = gravity
    mech = model.reference_power * (np.maximum(thrust, 0.0) / (g * model.reference_mass)) ** model.mass_exponent
    return mech / model.motor_efficiency + model.avionics_power


def integrate_power(times, power, voltage: float) -> Consumption:
    t = np.asarray(times, dtype=float)
    p = np.asarray(power, dtype=float)
    if t.shape != p.shape:
        raise ValueError("times and power must have the same shape")
    if t.size > 1 and np.any(np.diff(t) <= 0):
        raise ValueError("trace timestamps must be strictly increasing")
    energy = float(np.trapezoid(p, t)) if t.size > 1 else 0.0
    return Consumption(joules_to_mah(energy, voltage), energy)


def integrate_consumption(times, thrust: Mapping[str, Sequence[float]],
                          models: Mapping[str, PowerModel] | PowerModel,
                          gravity: float = 9.81) -> dict[str, Consumption]:
    """Per-vehicle charge and energy from a thrust-magnitude trace (trapezoid rule)."""
    out = {}
    for vehicle, series in thrust.items():
        model = models if isinstance(models, PowerModel) else models[vehicle]
        out[vehicle] = integrate_power(times, electrical_power(model, series, gravity),
                                       model.battery_voltage)
    return out


def power_models_from_config(config) -> dict[str, PowerModel]:
    p = config.power
    common = dict(mass_exponent=p.mass_exponent, avionics_power=p.avionics_power,
                  battery_voltage=p.battery_voltage, motor_efficiency=p.motor_efficiency)
    return {
        "drone": PowerModel(p.drone_reference_mass, p.drone_reference_power, **common),
        "pod": PowerModel(p.pod_reference_mass, p.pod_reference_power, **common),
    }
