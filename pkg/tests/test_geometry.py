import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensile_perch import geometry
from tensile_perch.geometry import CriticalDistanceParams, PenetrationError, WrapState
from tensile_perch.scenario import BranchSpec

BRANCH = BranchSpec()
CX, CY = geometry.branch_center(BRANCH)
R = BRANCH.radius


def circle(turns: float, radius: float, n_per_turn: int, phase: float = 0.0, sign: int = 1):
    n = max(2, int(round(abs(turns) * n_per_turn)) + 1)
    t = phase + sign * np.linspace(0.0, 2 * math.pi * turns, n)
    return [(CX + radius * math.cos(a), CY + radius * math.sin(a)) for a in t]


def crossing_winding_number(points) -> int:
    """Signed crossings of the ray from the centre toward +x (closed polyline)."""
    w = 0
    for (x0, y0), (x1, y1) in zip(points, points[1:]):
        y0 -= CY
        y1 -= CY
        if y0 <= 0 < y1 or y1 <= 0 < y0:
            x = x0 + (x1 - x0) * (-y0) / (y1 - y0)
            if x > CX:
                w += 1 if y1 > y0 else -1
    return w


def unwrap_oracle(points) -> float:
    ang = np.unwrap([math.atan2(y - CY, x - CX) for x, y in points])
    return float(ang[-1] - ang[0])


def refine(points):
    out = [points[0]]
    for a, b in zip(points, points[1:]):
        out.append(((a[0] + b[0]) / 2, (a[1] + b[1]) / 2))
        out.append(b)
    return out


def test_loops_of_uses_floor():
    assert geometry.loops_of(0.0) == 0
    assert geometry.loops_of(2 * math.pi - 1e-6) == 0
    assert geometry.loops_of(2 * math.pi) == 1
    assert geometry.loops_of(-4.5 * math.pi) == 2


@settings(max_examples=200, deadline=None)
@given(loops=st.integers(-4, 4), radius=st.floats(1.5, 20.0), n=st.integers(8, 64),
       phase=st.floats(-math.pi, math.pi))
def test_closed_loop_winding_matches_crossing_count(loops, radius, n, phase):
    pts = circle(abs(loops), radius * R, n, phase, sign=1 if loops >= 0 else -1)
    if loops == 0:
        pts = [pts[0], pts[0]]
    angle = geometry.winding_angle(pts, BRANCH)
    assert angle == pytest.approx(2 * math.pi * loops, abs=1e-12)
    assert crossing_winding_number(pts) == loops


@settings(max_examples=200, deadline=None)
@given(turns=st.floats(-3.0, 3.0), radius=st.floats(1.5, 20.0), n=st.integers(8, 64))
def test_open_polyline_matches_unwrap_oracle(turns, radius, n):
    pts = circle(abs(turns), radius * R, n, sign=1 if turns >= 0 else -1)
    assert geometry.winding_angle(pts, BRANCH) == pytest.approx(unwrap_oracle(pts), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(loops=st.integers(1, 3), radius=st.floats(1.5, 10.0), n=st.integers(8, 32))
def test_refinement_invariance(loops, radius, n):
    pts = circle(loops, radius * R, n)
    coarse = geometry.winding_angle(pts, BRANCH)
    fine = geometry.winding_angle(refine(refine(pts)), BRANCH)
    assert abs(fine - coarse) < 1e-12


def test_penetrating_polyline_rejected():
    with pytest.raises(PenetrationError):
        geometry.winding_angle([(CX + 1, CY), (CX, CY), (CX - 1, CY)], BRANCH)


def test_incremental_update_equals_polyline_angle():
    pts = circle(2.3, 3 * R, 40)
    state = WrapState()
    for a, b in zip(pts, pts[1:]):
        state = geometry.wrap_angle_update(state, BRANCH, a, b)
    assert state.accumulated_angle == pytest.approx(geometry.winding_angle(pts, BRANCH), abs=1e-12)


def test_no_contact_when_straight():
    w = geometry.wrap_state((CX + 1.0, CY + 1.0), (CX + 1.0, CY), BRANCH, 0.1)
    assert not w.contact and w.entry_tangent_point is None
    free_d, arc, free_p = geometry.tether_partition((CX + 1.0, CY + 1.0), (CX + 1.0, CY), BRANCH, w)
    assert (free_d, arc, free_p) == (pytest.approx(1.0), 0.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(loops=st.integers(0, 4), h_d=st.floats(0.05, 2.0), h_p=st.floats(0.05, 2.0))
def test_hanging_partition_closed_form(loops, h_d, h_p):
    # drone hangs straight down from the left of the branch, pod from the right
    drone = (CX - R, CY - h_d)
    pod = (CX + R, CY - h_p)
    eps = math.atan2(R, h_d) + math.atan2(R, h_p)
    angle = -(2 * math.pi * (loops + 1) - eps)
    w = geometry.wrap_state(drone, pod, BRANCH, angle)
    assert w.contact
    assert w.entry_tangent_point == pytest.approx((CX - R, CY), abs=1e-12)
    assert w.exit_tangent_point == pytest.approx((CX + R, CY), abs=1e-12)
    free_d, arc, free_p = geometry.tether_partition(drone, pod, BRANCH, w)
    assert free_d == pytest.approx(h_d, abs=1e-12)
    assert free_p == pytest.approx(h_p, abs=1e-12)
    assert arc == pytest.approx(R * math.pi * (2 * loops + 1), rel=1e-12)
    assert geometry.loops_of(angle) == loops


def test_partition_rejects_negative_spool():
    with pytest.raises(ValueError):
        geometry.tether_partition((1, 11), (1, 10), BRANCH, WrapState(), spooled=-1.0)


def test_critical_distance_defaults():
    drone = CriticalDistanceParams(0.30, 0.05)
    assert geometry.critical_distance(0.0732, drone) == pytest.approx(0.3866)
    with pytest.raises(ValueError):
        geometry.critical_distance(-0.1, drone)
    with pytest.raises(ValueError):
        CriticalDistanceParams(0.0)


@settings(max_examples=200, deadline=None)
@given(d1=st.floats(0.0, 1.0), d2=st.floats(0.0, 1.0), body=st.floats(0.01, 1.0),
       clearance=st.floats(0.0, 0.5))
def test_critical_distance_affine_with_half_slope(d1, d2, body, clearance):
    p = CriticalDistanceParams(body, clearance)
    diff = geometry.critical_distance(d2, p) - geometry.critical_distance(d1, p)
    assert diff == pytest.approx(0.5 * (d2 - d1), abs=1e-12)
    assert geometry.critical_distance(0.0, p) == pytest.approx(body + clearance)


def test_circumnavigation_length():
    p = CriticalDistanceParams(0.30, 0.05)
    d = 0.0732
    base = geometry.circumnavigation_length(d, p)
    assert base == pytest.approx(0.35 + 0.5 * math.pi * d)
    assert geometry.circumnavigation_length(d, p, 2) - base == pytest.approx(2 * math.pi * d)
    with pytest.raises(ValueError):
        geometry.circumnavigation_length(d, p, -1)
