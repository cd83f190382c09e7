"""Spool and level-wind kinematics of the pod's retraction winch.

Turns are laid side by side, ``turns_per_layer`` per layer, each layer one
tether diameter further out. Turns are counted from the core outward, so
``released_length(turns)`` is the tether length stored by that many turns
(equivalently, released when unwinding them from a full spool's core end).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class OverCapacityError(ValueError):
    pass


@dataclass(frozen=True)
class SpoolSpec:
    core_radius: float = 0.010
    spool_width: float = 0.020
    tether_diameter: float = 0.001
    max_turns: int = 60
    winch_rate_max: float = 0.15

    def __post_init__(self) -> None:
        if self.core_radius <= 0:
            raise ValueError("core_radius must be > 0")
        if self.turns_per_layer < 1:
            raise ValueError("spool must hold at least one turn per layer")

    @property
    def turns_per_layer(self) -> int:
        # tolerance so 0.020 / 0.001 counts as 20, not 19.999...
        return int(math.floor(self.spool_width / self.tether_diameter + 1e-9))

    @property
    def capacity(self) -> float:
        return released_length(self, self.max_turns)

    @classmethod
    def from_config(cls, config) -> SpoolSpec:
        s = config.spool
        return cls(s.core_radius, s.spool_width, config.tether.diameter, s.max_turns,
                   s.winch_rate_max)


def layer_radius(spec: SpoolSpec, layer: int) -> float:
    return spec.core_radius + (layer + 0.5) * spec.tether_diameter


def released_length(spec: SpoolSpec, turns: float) -> float:
    if turns < 0:
        raise ValueError("turns must be >= 0")
    if turns > spec.max_turns:
        raise OverCapacityError(f"{turns} turns exceeds spool capacity of {spec.max_turns}")
    tpl = spec.turns_per_layer
    full_layers = int(turns // tpl)
    partial = turns - full_layers * tpl
    # sum_{i<L} 2 pi r_i tpl with r_i = core + (i + 1/2) d
    d = spec.tether_diameter
    radii_sum = full_layers * spec.core_radius + d * (full_layers * full_layers) / 2.0
    total = 2.0 * math.pi * tpl * radii_sum
    return total + 2.0 * math.pi * layer_radius(spec, full_layers) * partial


def turns_for_length(spec: SpoolSpec, length: float) -> float:
    if length < 0:
        raise ValueError("length must be >= 0")
    capacity = spec.capacity
    if length > capacity * (1 + 1e-12):
        raise OverCapacityError(f"{length} m exceeds spool capacity of {capacity} m")
    if length >= capacity:
        return float(spec.max_turns)
    tpl = spec.turns_per_layer
    remaining = length
    layer = 0
    while True:
        per_layer = 2.0 * math.pi * layer_radius(spec, layer) * tpl
        if remaining <= per_layer or (layer + 1) * tpl >= spec.max_turns:
            turns = layer * tpl + remaining / (2.0 * math.pi * layer_radius(spec, layer))
            return min(turns, float(spec.max_turns))
        remaining -= per_layer
        layer += 1


def guide_position(spec: SpoolSpec, turns: float) -> float:
    """Lateral tether-guide offset from the spool centre line (triangle wave)."""
    if turns < 0:
        raise ValueError("turns must be >= 0")
    tpl = spec.turns_per_layer
    half = spec.spool_width / 2.0
    phase = math.fmod(turns, 2.0 * tpl)
    if phase <= tpl:
        return -half + spec.spool_width * phase / tpl
    return half - spec.spool_width * (phase - tpl) / tpl
