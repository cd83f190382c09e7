"""Compare the compiled and pure-Python tether kernels.

Times the bare per-step solve on a wrapped, sliding configuration and a full
duo-perch mission under each backend (the mission runs in a subprocess so the
backend is chosen at import, exactly as a user would select it).

    python benchmarks/bench_kernels.py [--steps N] [--repeat R] [--json]
"""

from __future__ import annotations

import argparse
import json
import math
import os
import statistics
import subprocess
import sys
import time

from tensile_perch import _kernels_py

try:
    from tensile_perch import _ckernels
except ImportError:
    _ckernels = None

CX, CY, R = 0.0, 10.0, 0.0366

MISSION = (
    "import time\n"
    "from tensile_perch import kernels, strategies\n"
    "from tensile_perch.scenario import ScenarioConfig\n"
    "t0 = time.perf_counter()\n"
    "trace = strategies.run_duo_perch(ScenarioConfig())\n"
    "print(kernels.BACKEND, time.perf_counter() - t0, trace.outcome.value,"
    " trace.final_state.time)\n"
)


def _wrapped_args():
    drone = (CX - R, CY - 0.5)
    pod = (CX + R, CY - 0.5)
    eps = 2 * math.atan2(R, 0.5)
    theta = -(6 * math.pi - eps)
    g = _kernels_py.wrap_geometry(*drone, *pod, CX, CY, R, theta)
    # heavy drone on a slippery branch: exercises the slip branch of the solve
    return [drone[0], drone[1], 0.0, 0.0, pod[0], pod[1], 0.0, 0.0, theta, 3.0 - g[0], True,
            0.0, -1.11 * 9.81, 0.0, -0.1 * 9.81, 0.0, 1 / 1.11, 1 / 0.1,
            CX, CY, R, 0.05, 3.0, 3.5, 1e-3, 1e-6]


def time_steps(module, steps: int, repeat: int) -> float:
    """Best-of-``repeat`` seconds per step, feeding each output back in."""
    best = math.inf
    for _ in range(repeat):
        args = _wrapped_args()
        t0 = time.perf_counter()
        for _ in range(steps):
            out = module.tether_step(*args)
            args[0:11] = out[0:11]
        best = min(best, (time.perf_counter() - t0) / steps)
    return best


def time_mission(pure: bool, repeat: int) -> tuple[float, str]:
    env = dict(os.environ)
    env.pop("TENSILE_PERCH_PURE_PYTHON", None)
    if pure:
        env["TENSILE_PERCH_PURE_PYTHON"] = "1"
    walls, outcome = [], ""
    for _ in range(repeat):
        out = subprocess.run([sys.executable, "-c", MISSION], env=env, capture_output=True,
                             text=True, check=True).stdout.split()
        walls.append(float(out[1]))
        outcome = out[2]
    return statistics.median(walls), outcome


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--json", action="store_true", help="print results as JSON")
    args = parser.parse_args(argv)

    results = {"steps": args.steps, "python_step_us": time_steps(_kernels_py, args.steps,
                                                                 args.repeat) * 1e6}
    results["python_mission_s"], results["python_outcome"] = time_mission(True, args.repeat)
    if _ckernels is not None:
        results["cython_step_us"] = time_steps(_ckernels, args.steps, args.repeat) * 1e6
        results["cython_mission_s"], results["cython_outcome"] = time_mission(False, args.repeat)
        results["step_speedup"] = results["python_step_us"] / results["cython_step_us"]
        results["mission_speedup"] = results["python_mission_s"] / results["cython_mission_s"]

    if args.json:
        print(json.dumps(results, indent=2, sort_keys=True))
        return 0
    print(f"{'backend':<8} {'us/step':>10} {'duo_perch s':>12}  outcome")
    print(f"{'python':<8} {results['python_step_us']:>10.2f} {results['python_mission_s']:>12.2f}"
          f"  {results['python_outcome']}")
    if _ckernels is None:
        print("cython   (extension not built)")
        return 0
    print(f"{'cython':<8} {results['cython_step_us']:>10.2f} {results['cython_mission_s']:>12.2f}"
          f"  {results['cython_outcome']}")
    print(f"speedup: {results['step_speedup']:.1f}x per step, "
          f"{results['mission_speedup']:.2f}x per mission")
    return 0


if __name__ == "__main__":
    sys.exit(main())
