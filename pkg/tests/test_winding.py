import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensile_perch import winding
from tensile_perch.scenario import ScenarioConfig
from tensile_perch.winding import OverCapacityError, SpoolSpec

SPEC = SpoolSpec()
specs = st.builds(
    SpoolSpec,
    core_radius=st.floats(0.002, 0.05),
    spool_width=st.floats(0.005, 0.05),
    tether_diameter=st.floats(0.0005, 0.004),
    max_turns=st.integers(1, 200),
)


def brute_released(spec: SpoolSpec, turns: float) -> float:
    """Lay the tether one turn at a time."""
    total = 0.0
    tpl = spec.turns_per_layer
    whole = int(math.floor(turns))
    for i in range(whole):
        total += 2 * math.pi * (spec.core_radius + (i // tpl + 0.5) * spec.tether_diameter)
    frac = turns - whole
    layer = whole // tpl
    return total + frac * 2 * math.pi * (spec.core_radius + (layer + 0.5) * spec.tether_diameter)


def test_defaults():
    assert SPEC.turns_per_layer == 20
    # 20 turns at r=10.5 mm, 20 at 11.5 mm, 20 at 12.5 mm
    expected = 2 * math.pi * 20 * (0.0105 + 0.0115 + 0.0125)
    assert SPEC.capacity == pytest.approx(expected, rel=1e-12)


def test_from_config():
    spec = SpoolSpec.from_config(ScenarioConfig())
    assert spec.tether_diameter == 0.001 and spec.max_turns == 60


@settings(max_examples=300, deadline=None)
@given(spec=specs, u=st.floats(0.0, 1.0))
def test_released_length_matches_brute_force(spec, u):
    turns = u * spec.max_turns
    assert winding.released_length(spec, turns) == pytest.approx(brute_released(spec, turns),
                                                                 rel=1e-12, abs=1e-15)


@settings(max_examples=300, deadline=None)
@given(spec=specs, u=st.floats(0.0, 1.0))
def test_turns_for_length_inverts(spec, u):
    turns = u * spec.max_turns
    length = winding.released_length(spec, turns)
    assert winding.turns_for_length(spec, length) == pytest.approx(turns, abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(spec=specs)
def test_slopes_piecewise_constant_and_non_decreasing(spec):
    tpl = spec.turns_per_layer
    slopes = []
    h = 1e-3
    for t in range(spec.max_turns):
        a = winding.released_length(spec, t + 0.25)
        b = winding.released_length(spec, t + 0.25 + h)
        slopes.append((b - a) / h)
    for t, s in enumerate(slopes):
        layer = t // tpl
        assert s == pytest.approx(2 * math.pi * winding.layer_radius(spec, layer), rel=1e-6)
    assert all(b >= a - 1e-9 for a, b in zip(slopes, slopes[1:]))
    assert all(s > 0 for s in slopes)


@settings(max_examples=200, deadline=None)
@given(spec=specs)
def test_released_length_continuous_at_layer_boundaries(spec):
    tpl = spec.turns_per_layer
    for boundary in range(tpl, spec.max_turns, tpl):
        h = 1e-9
        lo = winding.released_length(spec, boundary - h)
        hi = winding.released_length(spec, boundary)
        slope = 2 * math.pi * winding.layer_radius(spec, boundary // tpl)
        assert abs(hi - lo) <= slope * h + 1e-12


def test_out_of_range():
    with pytest.raises(ValueError):
        winding.released_length(SPEC, -1)
    with pytest.raises(OverCapacityError):
        winding.released_length(SPEC, SPEC.max_turns + 1)
    with pytest.raises(OverCapacityError):
        winding.turns_for_length(SPEC, SPEC.capacity * 1.01)
    with pytest.raises(ValueError):
        winding.turns_for_length(SPEC, -0.1)
    assert winding.turns_for_length(SPEC, SPEC.capacity) == SPEC.max_turns


def test_spec_validation():
    with pytest.raises(ValueError):
        SpoolSpec(core_radius=0.0)
    with pytest.raises(ValueError):
        SpoolSpec(spool_width=0.0005, tether_diameter=0.001)


def test_guide_position_triangle_wave():
    tpl = SPEC.turns_per_layer
    half = SPEC.spool_width / 2
    assert winding.guide_position(SPEC, 0) == pytest.approx(-half)
    assert winding.guide_position(SPEC, tpl) == pytest.approx(half)
    assert winding.guide_position(SPEC, 2 * tpl) == pytest.approx(-half)
    assert winding.guide_position(SPEC, tpl / 2) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        winding.guide_position(SPEC, -1)


@settings(max_examples=200, deadline=None)
@given(spec=specs, t=st.floats(0.0, 500.0))
def test_guide_speed_constant_away_from_reversals(spec, t):
    tpl = spec.turns_per_layer
    h = 1e-6
    phase = math.fmod(t, tpl)
    if phase < 2 * h or phase > tpl - 2 * h:
        return
    slope = (winding.guide_position(spec, t + h) - winding.guide_position(spec, t)) / h
    assert abs(slope) == pytest.approx(spec.spool_width / tpl, rel=1e-4)
    half = spec.spool_width / 2
    assert -half - 1e-12 <= winding.guide_position(spec, t) <= half + 1e-12


@settings(max_examples=200, deadline=None)
@given(spec=specs, t=st.floats(0.0, 500.0))
def test_guide_continuous(spec, t):
    h = 1e-9
    step = spec.spool_width / spec.turns_per_layer
    assert abs(winding.guide_position(spec, t + h) - winding.guide_position(spec, t)) <= 2 * step * h
