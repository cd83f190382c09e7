"""``tensile-perch`` command line.

Exit codes: 0 success, 1 usage / input / I/O error, 2 mission failure
(SLIPPED, TIMEOUT or ABORTED). Output files default to the directory named
by ``TENSILE_PERCH_OUTPUT_DIR`` (current directory when unset). CSV uses LF
line endings and always carries a header row.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from tensile_perch import capstan, energy, geometry, scenario, strategies

OUTPUT_DIR_ENV = "TENSILE_PERCH_OUTPUT_DIR"
SUCCESS_OUTCOMES = {strategies.Outcome.PERCHED, strategies.Outcome.AIRBORNE}
ENUM_FIELDS = {"strategy": scenario.STRATEGIES, "mission.energy_accounting": scenario.ENERGY_MODES}

EXIT_OK, EXIT_USAGE, EXIT_MISSION = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; 2 is reserved for mission failure here
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _num(x: float) -> str:
    return format(float(x), ".12g")


def _json(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()


def _output_dir() -> Path:
    return Path(os.environ.get(OUTPUT_DIR_ENV) or ".")


def _write(text: str, path: str | None) -> None:
    """Write to ``path`` (relative paths land in the output directory) or stdout."""
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    target = Path(path)
    if not target.is_absolute():
        target = _output_dir() / target
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _format_arg(p: argparse.ArgumentParser, default: str) -> None:
    p.add_argument("--format", choices=("json", "csv"), default=default,
                   help=f"output format (default {default})")


# -- simulate -----------------------------------------------------------------

def _load(path: str | None) -> scenario.ScenarioConfig:
    if path is None:
        return scenario.ScenarioConfig()
    return scenario.load_scenario(path)


def _phase_rows(trace: strategies.StrategyTrace) -> list[list[Any]]:
    return [[p.name, p.entered_at, p.exited_at, p.loops_at_exit, p.charge_mah["drone"],
             p.charge_mah["pod"], p.energy_j["drone"], p.energy_j["pod"]] for p in trace.phases]


PHASE_HEADER = ("phase", "entered_at_s", "exited_at_s", "loops_at_exit", "drone_mah", "pod_mah",
                "drone_j", "pod_j")


def cmd_simulate(args: argparse.Namespace) -> int:
    config = _load(args.scenario)
    if args.strategy:
        config = config.replace(strategy=args.strategy)
    if args.energy:
        config = config.replace(mission__energy_accounting=args.energy)
    trace = strategies.run_strategy(config)

    state_csv = io.StringIO(newline="")
    strategies.write_state_csv(trace, state_csv)
    _write(state_csv.getvalue(), args.state_csv)
    _write(trace.to_json(), args.trace_json)

    if args.format == "json":
        _write(_json({"strategy": config.strategy, "outcome": trace.outcome.value,
                      "final_loops": trace.final_loops, "total_charge_mah": trace.total_energy,
                      "warnings": trace.warnings}), None)
    else:
        _write(_csv(PHASE_HEADER, _phase_rows(trace)), None)
    for w in trace.warnings:
        print(f"warning: {w}", file=sys.stderr)
    if trace.outcome in SUCCESS_OUTCOMES:
        return EXIT_OK
    reason = trace.diagnostics.get("stop_reason") or trace.diagnostics.get("abort_reason") \
        or trace.diagnostics.get("slip_reason") or ""
    print(f"mission failed: {trace.outcome.value} {reason}".rstrip(), file=sys.stderr)
    return EXIT_MISSION


# -- counterweight --------------------------------------------------------------

def cmd_counterweight(args: argparse.Namespace) -> int:
    model = capstan.StabilityModel(friction_coeff=args.mu, angle_sensitivity=args.k)
    rows = capstan.counterweight_table(model, args.loops, args.angles, capstan.REFERENCE_POD_RATIO)
    if args.format == "csv":
        text = _csv(("loops", "angle_deg", "min_ratio", "feasible_at_0.308"),
                    [[n, float(a), r, str(f).lower()] for n, a, r, f in rows])
    else:
        text = _json({"mu": args.mu, "k": args.k, "pod_ratio": capstan.REFERENCE_POD_RATIO,
                      "rows": [{"loops": n, "angle_deg": a, "min_ratio": r,
                                "feasible_at_0.308": f} for n, a, r, f in rows]})
    _write(text, args.output)
    return EXIT_OK


# -- breakeven --------------------------------------------------------------------

def cmd_breakeven(args: argparse.Namespace) -> int:
    overrides = {"battery_voltage": args.voltage, "avionics_power": args.avionics_power}
    if args.exponent is not None:
        model = energy.PowerModel(mass_exponent=args.exponent, **overrides)
    else:
        model = energy.preset(args.preset, **overrides)
    maneuver_j = energy.mah_to_joules(args.maneuver_mah, args.voltage)
    fraction = energy.break_even_idle_fraction(model, args.base_mass, args.system_mass,
                                               maneuver_j, args.mission_time)
    record = {
        "preset": args.preset if args.exponent is None else "custom",
        "mass_exponent": model.mass_exponent,
        "base_mass_kg": args.base_mass,
        "system_mass_kg": args.system_mass,
        "maneuver_energy_j": maneuver_j,
        "mission_time_s": args.mission_time,
        "idle_fraction": fraction,
    }
    if args.format == "csv":
        _write(_csv(list(record), [list(record.values())]), args.output)
    else:
        _write(_json(record), args.output)
    if args.curve:
        added = np.linspace(0.0, args.curve_max_added, args.curve_steps)
        curve = energy.idle_time_curve(model, args.base_mass, [float(a) for a in added],
                                       maneuver_j, args.mission_time)
        _write(_csv(("added_mass_kg", "idle_fraction"), [list(p) for p in curve]), args.curve)
    return EXIT_OK


# -- critdist ---------------------------------------------------------------------

def cmd_critdist(args: argparse.Namespace) -> int:
    if args.steps < 1:
        raise UsageError("--steps must be >= 1")
    if args.to < args.from_:
        raise UsageError("--to must be >= --from")
    drone = geometry.CriticalDistanceParams(args.drone_radius, args.clearance)
    pod = geometry.CriticalDistanceParams(args.pod_radius, args.clearance)
    diameters = np.linspace(args.from_, args.to, args.steps) if args.steps > 1 else np.array([args.from_])
    rows = [[float(d), geometry.critical_distance(float(d), pod),
             geometry.critical_distance(float(d), drone)] for d in diameters]
    header = ("branch_diameter_m", "dmin_pod_m", "dmin_drone_m")
    if args.format == "csv":
        _write(_csv(header, rows), args.output)
    else:
        _write(_json({"rows": [dict(zip(header, r)) for r in rows]}), args.output)
    return EXIT_OK


# -- sweep ------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple
    parallelism: int = 1

    def __post_init__(self) -> None:
        if self.parallelism < 1:
            raise UsageError("parallelism must be >= 1")
        if not self.values:
            raise UsageError("sweep needs at least one value")
        try:
            current = scenario.get_path(scenario.ScenarioConfig(), self.parameter)
        except (KeyError, AttributeError, scenario.ScenarioError):
            raise UsageError(f"unknown scenario parameter {self.parameter!r}") from None
        if self.parameter not in ENUM_FIELDS and not isinstance(current, (int, float)):
            raise UsageError(f"{self.parameter!r} is not a numeric or enum field")


def _parse_value(text: str) -> Any:
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _sweep_one(job: tuple[int, dict, str, Any]) -> dict:
    index, base, parameter, value = job
    record = {"index": index, "value": value}
    try:
        data = json.loads(json.dumps(base))
        scenario.set_path(data, parameter, value)
        config = scenario.check_valid(scenario.from_dict(data))
        trace = strategies.run_strategy(config)
    except (scenario.ScenarioError, KeyError, ValueError, TypeError) as exc:
        record.update(error=str(exc), outcome=None)
        return record
    record.update(
        outcome=trace.outcome.value, final_loops=trace.final_loops,
        drone_mah=trace.total_energy["drone"], pod_mah=trace.total_energy["pod"],
        sim_time_s=trace.final_state.time, error=None,
    )
    return record


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _load(args.scenario)
    if args.strategy:
        config = config.replace(strategy=args.strategy)
    spec = SweepSpec(args.param, tuple(_parse_value(v) for v in args.values), args.parallel)
    base = scenario.to_dict(config)
    jobs = [(i, base, spec.parameter, v) for i, v in enumerate(spec.values)]
    if spec.parallelism == 1:
        results = [_sweep_one(j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=spec.parallelism) as pool:
            results = list(pool.map(_sweep_one, jobs))  # map keeps input order
    failed = [r["index"] for r in results if r["error"] is not None]
    mission_failed = [r["index"] for r in results
                      if r["error"] is None and r["outcome"] not in ("PERCHED", "AIRBORNE")]
    if args.format == "csv":
        header = ("index", "value", "outcome", "final_loops", "drone_mah", "pod_mah", "sim_time_s",
                  "error")
        rows = [[r["index"], json.dumps(r["value"])] + [r.get(k, "") if r.get(k) is not None else ""
                                                       for k in header[2:]] for r in results]
        text = _csv(header, rows)
    else:
        text = _json({"parameter": spec.parameter, "strategy": config.strategy, "results": results,
                      "failed_indices": failed, "mission_failed_indices": mission_failed})
    _write(text, args.output)
    if failed:
        print(f"sweep: {len(failed)} run(s) failed at indices {failed}", file=sys.stderr)
        return EXIT_USAGE
    if mission_failed:
        print(f"sweep: mission failure at indices {mission_failed}", file=sys.stderr)
        return EXIT_MISSION
    return EXIT_OK


# -- schema -----------------------------------------------------------------------

def _schema_rows(node: dict, prefix: str = "") -> list[list[Any]]:
    rows = []
    for name, sub in node.get("properties", {}).items():
        path = f"{prefix}.{name}" if prefix else name
        if sub.get("type") == "object":
            rows.extend(_schema_rows(sub, path))
        else:
            default = sub.get("default")
            rows.append([path, sub.get("type", ""), json.dumps(default),
                         "|".join(sub.get("enum", []))])
    return rows


def cmd_schema(args: argparse.Namespace) -> int:
    doc = scenario.schema()
    if args.format == "csv":
        _write(_csv(("path", "type", "default", "enum"), _schema_rows(doc)), args.output)
    else:
        _write(_json(doc), args.output)
    return EXIT_OK


# -- parser -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tensile-perch",
                     description="Simulate and analyse tethered perching on branches.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="run a perch/disentangle strategy")
    p.add_argument("scenario", nargs="?", help="scenario JSON (defaults when omitted)")
    p.add_argument("--strategy", choices=scenario.STRATEGIES)
    p.add_argument("--energy", choices=scenario.ENERGY_MODES, help="energy accounting mode")
    p.add_argument("--trace-json", default="trace.json", help="StrategyTrace JSON path")
    p.add_argument("--state-csv", default="state.csv", help="10 ms state trace CSV path")
    _format_arg(p, "json")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("counterweight", help="minimum counterweight table")
    p.add_argument("--mu", type=float, default=capstan.DEFAULT_MU)
    p.add_argument("--k", type=float, default=capstan.DEFAULT_ANGLE_SENSITIVITY)
    p.add_argument("--loops", type=int, nargs="+", default=[1, 2, 3])
    p.add_argument("--angles", type=float, nargs="+", default=[0.0, 15.0, 30.0],
                   help="branch angles in degrees")
    p.add_argument("--output", help="output path (stdout when omitted)")
    _format_arg(p, "csv")
    p.set_defaults(func=cmd_counterweight)

    p = sub.add_parser("breakeven", help="idle-time break-even fraction")
    p.add_argument("--preset", choices=sorted(energy.PRESETS), default="theoretical")
    p.add_argument("--exponent", type=float, help="explicit mass exponent (overrides --preset)")
    p.add_argument("--base-mass", type=float, default=energy.TABLE_DRONE_MASS)
    p.add_argument("--system-mass", type=float, default=energy.TABLE_SYSTEM_MASS)
    p.add_argument("--maneuver-mah", type=float, default=0.0)
    p.add_argument("--mission-time", type=float, default=3600.0, help="seconds")
    p.add_argument("--voltage", type=float, default=14.8)
    p.add_argument("--avionics-power", type=float, default=0.0)
    p.add_argument("--curve", help="also write an idle-time curve CSV to this path")
    p.add_argument("--curve-max-added", type=float, default=1.0, help="kg")
    p.add_argument("--curve-steps", type=int, default=21)
    p.add_argument("--output", help="output path (stdout when omitted)")
    _format_arg(p, "json")
    p.set_defaults(func=cmd_breakeven)

    p = sub.add_parser("critdist", help="critical distance against branch diameter")
    p.add_argument("--from", dest="from_", type=float, default=0.02, help="m")
    p.add_argument("--to", type=float, default=0.20, help="m")
    p.add_argument("--steps", type=int, default=10)
    defaults = scenario.VehicleSpec()
    p.add_argument("--drone-radius", type=float, default=defaults.drone_body_radius)
    p.add_argument("--pod-radius", type=float, default=defaults.pod_half_diagonal)
    p.add_argument("--clearance", type=float, default=scenario.MissionConfig().clearance)
    p.add_argument("--output", help="output path (stdout when omitted)")
    _format_arg(p, "csv")
    p.set_defaults(func=cmd_critdist)

    p = sub.add_parser("sweep", help="run a strategy over values of one parameter")
    p.add_argument("scenario", nargs="?", help="base scenario JSON (defaults when omitted)")
    p.add_argument("--param", required=True, help="dotted parameter path, e.g. vehicles.pod_mass")
    p.add_argument("--values", required=True, nargs="+", help="values (parsed as JSON)")
    p.add_argument("--parallel", type=int, default=1)
    p.add_argument("--strategy", choices=scenario.STRATEGIES)
    p.add_argument("--output", help="output path (stdout when omitted)")
    _format_arg(p, "json")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("schema", help="scenario JSON schema")
    p.add_argument("--output", help="output path (stdout when omitted)")
    _format_arg(p, "json")
    p.set_defaults(func=cmd_schema)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, scenario.ScenarioError, OSError, ValueError) as exc:
        print(f"tensile-perch {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
