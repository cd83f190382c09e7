"""Tether-branch contact geometry in the plane normal to the branch axis.

The tether is routed along tangent lines from each endpoint to the branch
circle plus the wrapped arc between the two tangent points. Which way (and
how many times) it goes round is carried by the accumulated wrap angle: the
signed angle swept at the branch centre walking the tether from the drone
end to the pod end. It only changes by winding-number bookkeeping as the
endpoints move, never by re-deriving it from positions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from tensile_perch import kernels
from tensile_perch.kernels import PenetrationError
from tensile_perch.scenario import BranchSpec

Point = tuple[float, float]

__all__ = [
    "CriticalDistanceParams", "PenetrationError", "WrapState", "branch_center",
    "circumnavigation_length", "critical_distance", "loops_of", "tether_partition",
    "wrap_angle_update", "wrap_state", "winding_angle",
]


@dataclass(frozen=True)
class WrapState:
    accumulated_angle: float = 0.0
    contact: bool = False
    entry_tangent_point: Point | None = None
    exit_tangent_point: Point | None = None

    @property
    def loops(self) -> int:
        return loops_of(self.accumulated_angle)


@dataclass(frozen=True)
class CriticalDistanceParams:
    body_radius: float
    clearance: float = 0.05

    def __post_init__(self) -> None:
        if self.body_radius <= 0:
            raise ValueError("body_radius must be > 0")
        if self.clearance < 0:
            raise ValueError("clearance must be >= 0")


def loops_of(angle: float) -> int:
    """Integer wrap count of an accumulated angle."""
    return int(math.floor(abs(angle) / (2.0 * math.pi) + 1e-12))


def branch_center(branch: BranchSpec) -> Point:
    return (0.0, branch.center_height)


def _check_outside(p: Point, branch: BranchSpec) -> None:
    cx, cy = branch_center(branch)
    if math.hypot(p[0] - cx, p[1] - cy) < branch.radius:
        raise PenetrationError(f"point {p} lies inside the branch")


def wrap_angle_update(state: WrapState, branch: BranchSpec, prev_anchor: Point,
                      new_anchor: Point) -> WrapState:
    """Add the signed angle subtended at the branch centre by an anchor move.

    The returned state keeps the contact flags of ``state``; use
    :func:`wrap_state` to refresh them from endpoint positions.
    """
    _check_outside(prev_anchor, branch)
    _check_outside(new_anchor, branch)
    cx, cy = branch_center(branch)
    delta = kernels.angle_delta(prev_anchor[0] - cx, prev_anchor[1] - cy,
                                new_anchor[0] - cx, new_anchor[1] - cy)
    return WrapState(state.accumulated_angle + delta, state.contact,
                     state.entry_tangent_point, state.exit_tangent_point)


def winding_angle(points: Sequence[Point], branch: BranchSpec) -> float:
    """Accumulated angle along a polyline (a closed loop gives 2*pi*winding number)."""
    cx, cy = branch_center(branch)
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    return kernels.accumulate_wrap(xs, ys, cx, cy, branch.radius)


def wrap_state(drone_pos: Point, pod_pos: Point, branch: BranchSpec, angle: float) -> WrapState:
    """Wrap state with contact flag and tangent points for the given endpoints."""
    cx, cy = branch_center(branch)
    g = kernels.wrap_geometry(drone_pos[0], drone_pos[1], pod_pos[0], pod_pos[1],
                              cx, cy, branch.radius, angle)
    if g[4] > 0.0:
        return WrapState(angle, True, (g[9], g[10]), (g[11], g[12]))
    return WrapState(angle, False, None, None)


def tether_partition(drone_pos: Point, pod_pos: Point, branch: BranchSpec, wrap: WrapState,
                     spooled: float = 0.0) -> tuple[float, float, float]:
    """Split the deployed tether into (drone-side free, wrapped arc, pod-side free).

    Without contact the whole straight span is reported as drone-side free
    length. ``spooled`` is accepted for symmetry with the length budget
    ``free_d + arc + free_p + spooled == total_length``; it does not change
    the geometry.
    """
    if spooled < 0:
        raise ValueError("spooled length must be >= 0")
    cx, cy = branch_center(branch)
    g = kernels.wrap_geometry(drone_pos[0], drone_pos[1], pod_pos[0], pod_pos[1],
                              cx, cy, branch.radius, wrap.accumulated_angle)
    return g[1], g[2], g[3]


def critical_distance(branch_diameter: float, params: CriticalDistanceParams) -> float:
    """Minimum centre-to-centre standoff for flying round a branch."""
    if branch_diameter < 0:
        raise ValueError("branch_diameter must be >= 0")
    return 0.5 * branch_diameter + params.body_radius + params.clearance


def circumnavigation_length(branch_diameter: float, params: CriticalDistanceParams,
                            loops: int = 0) -> float:
    """Tether needed to reach round the branch at the critical standoff.

    Radial span from the surface out to the standoff plus half the branch
    circumference for the drape, plus one circumference per extra loop.
    """
    if loops < 0:
        raise ValueError("loops must be >= 0")
    dmin = critical_distance(branch_diameter, params)
    return (dmin - 0.5 * branch_diameter) + (loops + 0.5) * math.pi * branch_diameter
