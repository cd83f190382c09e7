import json
import math
import os
import subprocess
import sys

import numpy as np
import pytest

from tensile_perch import _kernels_py as py
from tensile_perch import kernels

ck = pytest.importorskip("tensile_perch._ckernels", reason="compiled extension not built")

CX, CY, R = 0.0, 10.0, 0.0366


def random_step_args(rng):
    loops = int(rng.integers(0, 3))
    drone = (CX - R * rng.uniform(1.01, 10), CY - rng.uniform(0.1, 1.0))
    pod = (CX + R * rng.uniform(1.01, 10), CY - rng.uniform(0.1, 1.0))
    eps = math.atan2(R, CY - drone[1]) + math.atan2(R, CY - pod[1])
    theta = -(2 * math.pi * (loops + 1) - eps) * rng.uniform(0.9, 1.0)
    g = py.wrap_geometry(*drone, *pod, CX, CY, R, theta)
    total = 5.0
    spooled = total - g[0] - rng.uniform(-1e-4, 1e-4)
    return (
        drone[0], drone[1], *rng.uniform(-1, 1, 2), pod[0], pod[1], *rng.uniform(-1, 1, 2),
        theta, spooled, bool(rng.random() < 0.8),
        *rng.uniform(-20, 20, 2), *rng.uniform(-10, 10, 2), rng.uniform(-0.2, 0.2),
        float(rng.choice([0.0, 1 / 1.11])), 1 / 0.508,
        CX, CY, R, rng.uniform(0.0, 0.5), total, 4.0, 1e-3, 1e-6,
    )


def test_backend_selected():
    assert kernels.BACKEND == ("python" if os.environ.get("TENSILE_PERCH_PURE_PYTHON") else "cython")


@pytest.mark.parametrize("seed", range(20))
def test_tether_step_equivalence(seed):
    rng = np.random.default_rng(seed)
    for _ in range(100):
        args = random_step_args(rng)
        a = py.tether_step(*args)
        b = ck.tether_step(*args)
        assert a[10] == b[10]
        np.testing.assert_allclose(np.array(a[:10], dtype=float), np.array(b[:10], dtype=float),
                                   rtol=1e-12, atol=1e-12)
        # tensions are length residuals divided by dt twice, so last-bit libm
        # differences show up amplified
        np.testing.assert_allclose(a[11:], b[11:], rtol=1e-9, atol=1e-9)


@pytest.mark.parametrize("seed", range(10))
def test_wrap_geometry_equivalence(seed):
    rng = np.random.default_rng(100 + seed)
    for _ in range(200):
        d = (rng.uniform(-2, 2), CY + rng.uniform(-2, 2))
        p = (rng.uniform(-2, 2), CY + rng.uniform(-2, 2))
        if math.dist(d, (CX, CY)) < R or math.dist(p, (CX, CY)) < R:
            continue
        theta = rng.uniform(-20, 20)
        np.testing.assert_allclose(py.wrap_geometry(*d, *p, CX, CY, R, theta),
                                   ck.wrap_geometry(*d, *p, CX, CY, R, theta), rtol=1e-12, atol=1e-12)


def test_accumulate_and_angle_delta_equivalence():
    rng = np.random.default_rng(5)
    xs = list(CX + rng.uniform(0.5, 2, 300) * np.cos(np.linspace(0, 20, 300)))
    ys = list(CY + rng.uniform(0.5, 2, 300) * np.sin(np.linspace(0, 20, 300)))
    assert py.accumulate_wrap(xs, ys, CX, CY, R) == pytest.approx(
        ck.accumulate_wrap(xs, ys, CX, CY, R), abs=1e-12)
    for _ in range(100):
        v = rng.uniform(-1, 1, 4)
        assert py.angle_delta(*v) == pytest.approx(ck.angle_delta(*v), abs=1e-15)


def test_penetration_raises_in_both():
    for mod in (py, ck):
        with pytest.raises(kernels.PenetrationError):
            mod.wrap_geometry(CX, CY, 1.0, CY, CX, CY, R, 0.0)
        with pytest.raises(kernels.PenetrationError):
            mod.accumulate_wrap([CX + 1, CX], [CY, CY], CX, CY, R)


def _run_duo_perch(pure: bool) -> dict:
    env = dict(os.environ)
    env.pop("TENSILE_PERCH_PURE_PYTHON", None)
    if pure:
        env["TENSILE_PERCH_PURE_PYTHON"] = "1"
    code = (
        "import json\n"
        "from tensile_perch import kernels, strategies\n"
        "from tensile_perch.scenario import ScenarioConfig\n"
        "t = strategies.run_duo_perch(ScenarioConfig())\n"
        "print(json.dumps({'backend': kernels.BACKEND, 'outcome': t.outcome.value,"
        " 'loops': t.final_loops, 'phases': [p.name for p in t.phases],"
        " 'drone': t.final_state.drone_pos}))\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True,
                         check=True)
    return json.loads(out.stdout)


def test_full_mission_agrees_across_backends():
    fast = _run_duo_perch(False)
    slow = _run_duo_perch(True)
    assert (fast["backend"], slow["backend"]) == ("cython", "python")
    assert fast["outcome"] == slow["outcome"] == "PERCHED"
    assert fast["loops"] == slow["loops"] == 2
    assert fast["phases"] == slow["phases"]
    assert fast["drone"] == pytest.approx(slow["drone"], abs=1e-6)
