import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensile_perch import scenario
from tensile_perch.scenario import ScenarioConfig, ScenarioError


def test_default_is_valid():
    assert scenario.validate(ScenarioConfig()) == []


def test_default_total_mass():
    v = ScenarioConfig().vehicles
    assert v.drone_mass == 1.008
    assert v.pod_mass == 0.508
    assert v.ring_mass == 0.102
    assert v.total_mass == pytest.approx(1.618, abs=1e-12)


def test_default_branch_is_reference_diameter():
    assert ScenarioConfig().branch.diameter == pytest.approx(0.0732)
    assert ScenarioConfig().branch.radius == pytest.approx(0.0366)


def test_save_load_round_trip(tmp_path):
    cfg = ScenarioConfig().replace(vehicles__pod_mass=0.4, strategy="solo_perch")
    path = tmp_path / "s.json"
    scenario.save_scenario(cfg, path)
    loaded = scenario.load_scenario(path)
    assert loaded == cfg
    scenario.save_scenario(loaded, path)
    assert scenario.load_scenario(path) == loaded


def test_partial_file_fills_defaults(tmp_path):
    path = tmp_path / "s.json"
    path.write_text(json.dumps({"branch": {"diameter": 0.05}}))
    cfg = scenario.load_scenario(path)
    assert cfg.branch.diameter == 0.05
    assert cfg.vehicles == ScenarioConfig().vehicles


def test_malformed_json(tmp_path):
    path = tmp_path / "s.json"
    path.write_text("{not json")
    with pytest.raises(ScenarioError, match="malformed"):
        scenario.load_scenario(path)


def test_unknown_key_rejected():
    with pytest.raises(ScenarioError) as info:
        scenario.from_dict({"branch": {"radius_mm": 3}})
    assert info.value.violations[0].path == "branch.radius_mm"


def test_type_errors_rejected():
    with pytest.raises(ScenarioError, match="expected number"):
        scenario.from_dict({"gravity": "high"})
    with pytest.raises(ScenarioError, match="expected boolean"):
        scenario.from_dict({"mission": {"winch_enabled": 1}})
    with pytest.raises(ScenarioError, match="expected integer"):
        scenario.from_dict({"mission": {"perch_loops": 1.5}})


@pytest.mark.parametrize("override, path", [
    ({"branch__diameter": 0.0}, "branch.diameter"),
    ({"branch__incline_angle": math.pi / 2}, "branch.incline_angle"),
    ({"vehicles__pod_mass": -1.0}, "vehicles.pod_mass"),
    ({"vehicles__drone_max_thrust": 10.0}, "vehicles.drone_max_thrust"),
    ({"strategy": "hover"}, "strategy"),
    ({"mission__energy_accounting": "guess"}, "mission.energy_accounting"),
    ({"mission__initial_released": 99.0}, "mission.initial_released"),
    ({"mission__perch_loops": 0}, "mission.perch_loops"),
    ({"timestep": 0.0}, "timestep"),
])
def test_validation_violations(override, path):
    cfg = ScenarioConfig().replace(**override)
    paths = [v.path for v in scenario.validate(cfg)]
    assert path in paths
    with pytest.raises(ScenarioError):
        scenario.check_valid(cfg)


def test_validate_reports_every_violation():
    cfg = ScenarioConfig().replace(branch__diameter=-1.0, gravity=-9.81, seed=3)
    paths = {v.path for v in scenario.validate(cfg)}
    assert {"branch.diameter", "gravity"} <= paths


def test_replace_and_paths():
    cfg = ScenarioConfig().replace(vehicles__pod_mass=0.3)
    assert scenario.get_path(cfg, "vehicles.pod_mass") == 0.3
    with pytest.raises(KeyError):
        scenario.get_path(cfg, "vehicles.nope")
    data = scenario.to_dict(cfg)
    with pytest.raises(KeyError):
        scenario.set_path(data, "nope.x", 1)


def test_schema_lists_every_field_with_defaults():
    doc = scenario.schema()
    assert doc["properties"]["strategy"]["enum"] == list(scenario.STRATEGIES)
    assert doc["properties"]["vehicles"]["properties"]["pod_mass"]["default"] == 0.508
    assert set(doc["properties"]) == set(scenario.to_dict(ScenarioConfig()))


def test_dumps_is_canonical():
    text = scenario.dumps(ScenarioConfig())
    assert text.endswith("\n")
    assert text == scenario.dumps(scenario.from_dict(json.loads(text)))


@settings(max_examples=50, deadline=None)
@given(
    diameter=st.floats(0.01, 0.3),
    pod_mass=st.floats(0.05, 2.0),
    loops=st.integers(1, 5),
    strategy=st.sampled_from(scenario.STRATEGIES),
)
def test_round_trip_property(tmp_path_factory, diameter, pod_mass, loops, strategy):
    cfg = ScenarioConfig().replace(branch__diameter=diameter, vehicles__pod_mass=pod_mass,
                                   mission__perch_loops=loops, strategy=strategy)
    path = tmp_path_factory.mktemp("rt") / "s.json"
    scenario.save_scenario(cfg, path)
    assert scenario.from_dict(json.loads(path.read_text())) == cfg
