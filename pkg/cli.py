"""Command-line front end for SpineGrip.

Subcommands: pressure, detach, sweep, mission, calibrate. Every command
is a deterministic function of its config file and flags.
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List, Optional

from errors import ConfigError, DomainError, SpineGripError
from exporter import CSVExporter
from finger_mechanics import PhalanxChain, pressure_profile
from grasp_sim import (
    CalibrationBand,
    calibrate_relatch,
    required_grip_force,
    resolve_gravity,
    run_batch,
    simulate_detachment,
)
from settings_manager import SettingsManager, build_scenario, relatch_candidates, sweep_scenarios
from spine_contact import ContactMode
from sweep_calculator import SweepCalculator

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _status(message: str):
    print(message, file=sys.stderr)


def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers (got '{text}')") from None


def _overrides(args) -> dict:
    overrides = {}
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    if getattr(args, "mode", None) is not None:
        overrides["mode"] = ContactMode(args.mode)
    return overrides


def cmd_pressure(args) -> int:
    """Per-phalanx pressure table for a chain and a tether tension or torque."""
    lengths = args.lengths_m if args.lengths_m else [args.length_m] * args.n
    chain = PhalanxChain(lengths=tuple(lengths), pulley_radius=args.pulley_radius_m)
    if args.torque_nm is not None:
        if args.torque_nm < 0:
            raise DomainError(f"torque must be >= 0 (got {args.torque_nm})")
        tension = args.torque_nm / chain.pulley_radius
    else:
        tension = args.tension_n
    profile = pressure_profile(chain, tension)

    exporter = CSVExporter()
    if args.out:
        exporter.write_pressure(profile, args.out)
        _status(f"✅ Wrote pressure table: {args.out}")
    else:
        sys.stdout.write(exporter.to_text(exporter.pressure_frame(profile)))
    return EXIT_OK


def cmd_detach(args) -> int:
    """Seeded detachment runs: trace of the base seed plus one summary row per seed."""
    config = SettingsManager(args.config).load_config()
    scenario = build_scenario(config, **_overrides(args))
    reps = args.reps if args.reps is not None else config.experiment.repetitions
    if reps < 1:
        raise DomainError(f"reps must be >= 1 (got {reps})")

    trace = simulate_detachment(scenario)
    seeds = [scenario.seed + i for i in range(reps)]
    runs = run_batch([scenario.with_seed(s) for s in seeds], args.workers, args.progress, desc="detach")

    exporter = CSVExporter()
    out_dir = Path(args.out or "results")
    trace_path = exporter.write_trace(trace, scenario.n_fingers, str(out_dir / "trace.csv"))
    rows = [exporter.summary_row(scenario, run, config.target.kind) for run in runs]
    summary_path = exporter.write_summary(rows, str(out_dir / "summary.csv"))

    calculator = SweepCalculator()
    stats = calculator.cell_stats([r.max_force for r in runs])
    _status(f"✅ {reps} run(s): mean max force {calculator.format_force(stats.mean)} "
            f"(std {calculator.format_force(stats.std)})")
    _status(f"🔁 Seed {scenario.seed}: {trace.slip_count} slip(s), {trace.relatch_count} relatched")
    _status(f"📄 Trace: {trace_path}")
    _status(f"📄 Summary: {summary_path}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    """Monte Carlo over every (target, angle, interface, current) cell."""
    config = SettingsManager(args.config).load_config()
    cells = sweep_scenarios(config, **_overrides(args))
    reps = args.reps if args.reps is not None else config.experiment.repetitions
    if reps < 1:
        raise DomainError(f"reps must be >= 1 (got {reps})")

    jobs = []
    for target_name, interface_name, scenario in cells:
        for i in range(reps):
            jobs.append((target_name, interface_name, scenario.with_seed(scenario.seed + i)))
    runs = run_batch([job[2] for job in jobs], args.workers, args.progress, desc="sweep")

    exporter = CSVExporter()
    calculator = SweepCalculator()
    rows = [exporter.summary_row(scenario, run, target_name, interface_name)
            for (target_name, interface_name, scenario), run in zip(jobs, runs)]
    frame = exporter.summary_frame(rows)
    aggregated = calculator.aggregate(frame)
    out_path = args.out or str(Path("results") / "sweep.csv")
    exporter.write_sweep(aggregated, out_path)

    overall = calculator.overall_summary(frame)
    _status(f"✅ {overall.total_cells} cell(s), {overall.total_runs} run(s): "
            f"overall mean {calculator.format_force(overall.mean_max_force)} "
            f"(std {calculator.format_force(overall.std_max_force)})")
    curve = calculator.current_response(aggregated)
    if len(curve) > 1:
        points = list(zip(curve["current_a"], curve["mean_max_force_n"]))
        best = calculator.best_current(points)
        peak = dict(points)[best]
        _status(f"⚡ Best current {best:g} A: mean max force {calculator.format_force(peak)}")
    _status(f"📄 Sweep: {out_path}")
    return EXIT_OK


def cmd_mission(args) -> int:
    """Per-gripper load of a climbing robot, with an optional capability margin."""
    gravity = resolve_gravity(args.gravity)
    required = required_grip_force(args.mass_kg, gravity, args.stance)
    calculator = SweepCalculator()
    margin = None
    print(f"Required per-gripper force: {calculator.format_force(required)} "
          f"(mass {args.mass_kg:g} kg, g {gravity:g} m/s^2, {args.stance} stance legs)")
    if args.capability_mean_n is not None:
        if args.capability_std_n is None:
            raise DomainError("--capability-std-n is required with --capability-mean-n")
        margin = calculator.margin_in_sigma(required, args.capability_mean_n, args.capability_std_n)
        print(f"Margin: {margin:.2f} sigma (capability {args.capability_mean_n:g} N, "
              f"std {args.capability_std_n:g} N)")
    if args.out:
        CSVExporter().write_mission([{
            "mass_kg": args.mass_kg, "gravity_m_per_s2": gravity, "stance_legs": args.stance,
            "required_force_n": required, "margin_sigma": margin,
        }], args.out)
        _status(f"✅ Wrote mission report: {args.out}")
    return EXIT_OK


def cmd_calibrate(args) -> int:
    """Fit the relatch window so the current response peaks in the target band."""
    config = SettingsManager(args.config).load_config()
    base = build_scenario(config, **_overrides(args))
    candidates = relatch_candidates(config)
    if not candidates:
        raise DomainError("calibration search space is empty (no candidate with low_n < high_n)")
    band = CalibrationBand(best_currents=tuple(config.calibration.best_currents_a),
                           current_grid=tuple(config.calibration.currents_a))
    reps = args.reps if args.reps is not None else config.calibration.repetitions

    result = calibrate_relatch(band, base, candidates, repetitions=reps, workers=args.workers,
                               progress=args.progress)
    out_dir = Path(args.out or "results")
    curve_path, params_path = CSVExporter().write_calibration(
        result, str(out_dir / "current_response.csv"), str(out_dir / "relatch.json"))

    w = result.window
    flag = "✅ converged" if result.converged else "⚠️  not converged"
    _status(f"{flag}: low {w.low:g} N, high {w.high:g} N, rolloff {w.rolloff:g} N, floor {w.floor:g}")
    calculator = SweepCalculator()
    peak = calculator.best_current(result.curve)
    _status(f"⚡ Peak at {peak:g} A: mean max force {calculator.format_force(dict(result.curve)[peak])}")
    _status(f"📄 Curve: {curve_path}")
    _status(f"📄 Parameters: {params_path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinegrip", description="SpineGrip microspine gripper simulator")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v for info, -vv for debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", default=None, help="scenario config JSON (default: config.json)")
            p.add_argument("--seed", type=int, default=None, help="override experiment seed")
            p.add_argument("--reps", type=int, default=None, help="override repetition count")
            p.add_argument("--mode", choices=[m.value for m in ContactMode], default=None,
                           help="holding-force normal term")
            p.add_argument("--workers", type=int, default=os.cpu_count() or 1, help="worker processes")
            p.add_argument("--progress", action="store_true", help="show a progress bar on stderr")
        p.add_argument("--out", default=None, help="output path")

    p = sub.add_parser("pressure", help="per-phalanx pressure distribution")
    p.add_argument("--n", type=int, default=4, help="phalanx count (uniform chain)")
    p.add_argument("--length-m", type=float, default=0.03, help="phalanx length (uniform chain)")
    p.add_argument("--lengths-m", type=_float_list, default=None, help="comma-separated phalanx lengths")
    p.add_argument("--pulley-radius-m", type=float, default=0.005)
    load = p.add_mutually_exclusive_group()
    load.add_argument("--tension-n", type=float, default=0.0)
    load.add_argument("--torque-nm", type=float, default=None)
    common(p, config=False)
    p.set_defaults(func=cmd_pressure)

    p = sub.add_parser("detach", help="seeded detachment runs")
    common(p)
    p.set_defaults(func=cmd_detach)

    p = sub.add_parser("sweep", help="cell-aggregated Monte Carlo sweep")
    common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("mission", help="required grip force for a climbing mission")
    p.add_argument("--mass-kg", type=float, required=True)
    p.add_argument("--gravity", default="moon", help="moon, mars, earth or a value in m/s^2")
    p.add_argument("--stance", type=int, default=3, help="legs in stance (tripod gait: 3)")
    p.add_argument("--capability-mean-n", type=float, default=None)
    p.add_argument("--capability-std-n", type=float, default=None)
    common(p, config=False)
    p.set_defaults(func=cmd_mission)

    p = sub.add_parser("calibrate", help="fit the relatch window to the current band")
    common(p)
    p.set_defaults(func=cmd_calibrate)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING if args.verbose == 0 else logging.INFO if args.verbose == 1 else logging.DEBUG
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)

    try:
        return args.func(args)
    except ConfigError as e:
        _status(f"❌ Config error: {e}")
        return EXIT_CONFIG
    except (DomainError, SpineGripError) as e:
        _status(f"❌ Invalid input: {e}")
        return EXIT_CONFIG
    except Exception as e:
        logger.debug("unhandled error", exc_info=True)
        _status(f"💥 Runtime error: {e}")
        return EXIT_RUNTIME
